#include "ate/report.hpp"

#include "ate/errors.hpp"

namespace ate {

const char* method_name(Method m) {
    switch (m) {
        case Method::Diff: return "Diff";
        case Method::OLS: return "OLS";
        case Method::Match: return "Match";
        case Method::BH: return "BH";
        case Method::DR: return "DR";
        case Method::LV: return "LV";
        case Method::IV: return "IV";
        case Method::SampleMleS: return "SampleMLE-S";
        case Method::SampleMleC: return "SampleMLE-C";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    for (Method m : {Method::Diff, Method::OLS, Method::Match, Method::BH, Method::DR,
                     Method::LV, Method::IV, Method::SampleMleS, Method::SampleMleC}) {
        if (name == method_name(m)) return m;
    }
    throw ConfigError("unknown estimator name '" + name + "'");
}

}  // namespace ate
