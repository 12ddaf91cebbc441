#pragma once

namespace capsent {

enum class polarity { positive, negative };

inline const char* polarity_name(polarity p) {
    return p == polarity::positive ? "positive" : "negative";
}

}  // namespace capsent
