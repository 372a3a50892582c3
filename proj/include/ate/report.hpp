#ifndef ATE_REPORT_HPP
#define ATE_REPORT_HPP

#include <map>
#include <string>
#include <vector>

namespace ate {

enum class Method { Diff, OLS, Match, BH, DR, LV, IV, SampleMleS, SampleMleC };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct AteReport {
    Method method = Method::Diff;
    double mu1 = 0.0;
    double mu0 = 0.0;
    double tau = 0.0;  // always mu1 - mu0
    double se = 0.0;
    bool weighted = false;
    std::map<std::string, double> details;
    std::vector<std::string> notes;
};

inline AteReport make_report(Method m, double mu1, double mu0, double se, bool weighted) {
    AteReport r;
    r.method = m;
    r.mu1 = mu1;
    r.mu0 = mu0;
    r.tau = mu1 - mu0;
    r.se = se;
    r.weighted = weighted;
    return r;
}

}  // namespace ate

#endif
