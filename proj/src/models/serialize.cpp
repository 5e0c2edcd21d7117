#include "hbnet/error.hpp"
#include "hbnet/models.hpp"

namespace hbnet::models {

namespace {

using nlohmann::json;

json flags_json(const FitFlags& f) {
    return {{"converged", f.converged}, {"singular", f.singular},
            {"degenerate", f.degenerate}, {"iterations", f.iterations}};
}

FitFlags flags_from(const json& j) {
    FitFlags f;
    if (!j.is_object()) return f;
    f.converged = j.value("converged", true);
    f.singular = j.value("singular", false);
    f.degenerate = j.value("degenerate", false);
    f.iterations = j.value("iterations", 0);
    return f;
}

json lower_triangle(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j <= i; ++j) out.push_back(m(i, j));
    return out;
}

Eigen::MatrixXd from_lower_triangle(const json& a) {
    const auto len = a.size();
    Eigen::Index q = 0;
    while (static_cast<std::size_t>(q * (q + 1) / 2) < len) ++q;
    if (static_cast<std::size_t>(q * (q + 1) / 2) != len)
        throw ModelError("model json: covariance triangle has invalid length");
    Eigen::MatrixXd m(q, q);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < q; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            m(i, j) = a.at(k++).get<double>();
            m(j, i) = m(i, j);
        }
    return m;
}

}  // namespace

json to_json(const LocalModel& model) {
    json j;
    j["family"] = std::string(family_name(model));
    j["loglik"] = loglik(model);
    j["n_params"] = n_params(model);
    if (const auto* m = std::get_if<Multinomial>(&model)) {
        j["levels"] = m->levels;
        j["probs"] = m->probs;
    } else if (const auto* m = std::get_if<FixedGaussian>(&model)) {
        j["intercept"] = m->intercept;
        j["betas"] = m->betas;
        j["sigma2"] = m->sigma2;
        j["flags"] = flags_json(m->flags);
    } else if (const auto* m = std::get_if<MixedGaussian>(&model)) {
        j["intercept"] = m->intercept;
        j["betas"] = m->betas;
        j["sigma2"] = m->sigma2;
        j["re_cov"] = lower_triangle(m->re_cov);
        json modes = json::object();
        for (std::size_t c = 0; c < m->cluster_levels.size(); ++c) {
            json row = json::array();
            for (Eigen::Index k = 0; k < m->re_modes.cols(); ++k)
                row.push_back(m->re_modes(static_cast<Eigen::Index>(c), k));
            modes[m->cluster_levels[c]] = row;
        }
        j["cluster_levels"] = m->cluster_levels;
        j["re_modes"] = modes;
        j["flags"] = flags_json(m->flags);
    } else if (const auto* m = std::get_if<HeteroMixedGaussian>(&model)) {
        j["intercept"] = m->intercept;
        j["betas"] = m->betas;
        j["sigma2"] = m->sigma2;
        j["sigma2_b"] = m->sigma2_b;
        json modes = json::object();
        json theta = json::object();
        for (std::size_t c = 0; c < m->cluster_levels.size(); ++c) {
            modes[m->cluster_levels[c]] = m->re_intercepts[c];
            theta[m->cluster_levels[c]] = m->theta[c];
        }
        j["cluster_levels"] = m->cluster_levels;
        j["re_intercepts"] = modes;
        j["theta"] = theta;
        j["flags"] = flags_json(m->flags);
    }
    return j;
}

LocalModel from_json(const json& j) {
    try {
        const std::string family = j.at("family").get<std::string>();
        if (family == "multinomial_root") {
            Multinomial m;
            m.levels = j.at("levels").get<std::vector<std::string>>();
            m.probs = j.at("probs").get<std::vector<double>>();
            m.loglik = j.at("loglik").get<double>();
            m.n_params = j.at("n_params").get<int>();
            return m;
        }
        if (family == "fixed_gaussian") {
            FixedGaussian m;
            m.intercept = j.at("intercept").get<double>();
            m.betas = j.at("betas").get<std::vector<double>>();
            m.sigma2 = j.at("sigma2").get<double>();
            m.loglik = j.at("loglik").get<double>();
            m.n_params = j.at("n_params").get<int>();
            m.flags = flags_from(j.value("flags", json{}));
            return m;
        }
        if (family == "mixed_gaussian") {
            MixedGaussian m;
            m.intercept = j.at("intercept").get<double>();
            m.betas = j.at("betas").get<std::vector<double>>();
            m.sigma2 = j.at("sigma2").get<double>();
            m.re_cov = from_lower_triangle(j.at("re_cov"));
            m.cluster_levels = j.at("cluster_levels").get<std::vector<std::string>>();
            const auto& modes = j.at("re_modes");
            m.re_modes = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.cluster_levels.size()), m.re_cov.rows());
            for (std::size_t c = 0; c < m.cluster_levels.size(); ++c) {
                const auto row = modes.at(m.cluster_levels[c]).get<std::vector<double>>();
                if (static_cast<Eigen::Index>(row.size()) != m.re_cov.rows())
                    throw ModelError("model json: random-effect mode length mismatch");
                for (std::size_t k = 0; k < row.size(); ++k)
                    m.re_modes(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = row[k];
            }
            m.loglik = j.at("loglik").get<double>();
            m.n_params = j.at("n_params").get<int>();
            m.flags = flags_from(j.value("flags", json{}));
            return m;
        }
        if (family == "hetero_mixed_gaussian") {
            HeteroMixedGaussian m;
            m.intercept = j.at("intercept").get<double>();
            m.betas = j.at("betas").get<std::vector<double>>();
            m.sigma2 = j.at("sigma2").get<double>();
            m.sigma2_b = j.at("sigma2_b").get<double>();
            m.cluster_levels = j.at("cluster_levels").get<std::vector<std::string>>();
            for (const auto& level : m.cluster_levels) {
                m.re_intercepts.push_back(j.at("re_intercepts").at(level).get<double>());
                m.theta.push_back(j.at("theta").at(level).get<double>());
            }
            m.loglik = j.at("loglik").get<double>();
            m.n_params = j.at("n_params").get<int>();
            m.flags = flags_from(j.value("flags", json{}));
            return m;
        }
        throw ModelError("model json: unknown family " + family);
    } catch (const json::exception& ex) {
        throw ModelError(std::string("model json: ") + ex.what());
    }
}

}  // namespace hbnet::models
