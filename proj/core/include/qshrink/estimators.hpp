#ifndef QSHRINK_ESTIMATORS_HPP
#define QSHRINK_ESTIMATORS_HPP

#include <string>

#include "qshrink/errors.hpp"

namespace qshrink {

enum class Estimator { FM, SM, PT, S, PS };

inline const char* to_string(Estimator e) {
    switch (e) {
        case Estimator::FM: return "FM";
        case Estimator::SM: return "SM";
        case Estimator::PT: return "PT";
        case Estimator::S: return "S";
        case Estimator::PS: return "PS";
    }
    return "?";
}

inline Estimator parse_estimator(const std::string& s) {
    if (s == "FM") return Estimator::FM;
    if (s == "SM") return Estimator::SM;
    if (s == "PT") return Estimator::PT;
    if (s == "S") return Estimator::S;
    if (s == "PS") return Estimator::PS;
    throw validation_error("unknown estimator tag: " + s);
}

} // namespace qshrink

#endif
