#include "datascale/report.hpp"
#include "datascale/analyze.hpp"
#include "datascale/error.hpp"

#include <fstream>
#include <sstream>

namespace datascale {

using nlohmann::json;

namespace {

json law_json(const PowerLaw& law) { return {{"alpha", law.alpha}, {"c", law.c}, {"p", law.p}}; }

PowerLaw law_from(const json& j) {
    return {j.at("alpha").get<double>(), j.at("c").get<double>(), j.at("p").get<double>()};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace

std::string_view to_string(LossSpace space) { return space == LossSpace::log ? "log" : "linear"; }

LossSpace parse_loss_space(std::string_view text) {
    if (text == "log") return LossSpace::log;
    if (text == "linear") return LossSpace::linear;
    throw Error(ErrorKind::parse, "unknown loss space '" + std::string(text) + "'");
}

json to_json(const FitConfig& cfg) {
    return {{"loss_space", to_string(cfg.loss_space)},
            {"max_iters", cfg.max_iters},
            {"rel_tol", cfg.rel_tol},
            {"n_restarts", cfg.n_restarts},
            {"seed", cfg.seed}};
}

namespace {

FitConfig config_from(const json& j) {
    FitConfig cfg;
    cfg.loss_space = parse_loss_space(j.at("loss_space").get<std::string>());
    cfg.max_iters = j.at("max_iters").get<int>();
    cfg.rel_tol = j.at("rel_tol").get<double>();
    cfg.n_restarts = j.at("n_restarts").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

}  // namespace

PowerLaw FitReport::law(const std::optional<std::string>& condition) const {
    if (condition) {
        const auto it = laws.find(*condition);
        if (it == laws.end()) throw Error(ErrorKind::schema, "report has no condition '" + *condition + "'");
        return it->second;
    }
    if (laws.size() != 1) {
        std::ostringstream os;
        os << "report holds " << laws.size() << " laws; name a condition";
        throw Error(ErrorKind::schema, os.str());
    }
    return laws.begin()->second;
}

LawAnalysis analyze_law(const PowerLaw& law, const std::vector<double>& d_samples) {
    LawAnalysis a;
    a.asymptotic_loss = asymptotic_loss(law);
    a.transition_point = transition_point(law);
    for (const double d : d_samples) a.marginal_value.push_back({d, marginal_value(law, d)});
    return a;
}

json to_json(const FitReport& r) {
    json doc;
    doc["schema"] = kReportSchema;
    doc["kind"] = r.kind;
    json laws = json::object();
    for (const auto& [label, law] : r.laws) laws[label] = law_json(law);
    doc["laws"] = laws;
    doc["shared_p"] = optional_number(r.shared_p);
    if (r.joint) {
        const auto& j = *r.joint;
        doc["joint"] = {{"alpha", j.alpha}, {"p", j.p},     {"beta", j.beta},
                        {"p_e", j.p_e},     {"p_d", j.p_d}, {"l_inf", j.l_inf}};
    } else {
        doc["joint"] = nullptr;
    }
    if (r.tail) {
        doc["tail"] = {{"gamma", r.tail->gamma}, {"q", r.tail->q}, {"b", r.tail->b}};
    } else {
        doc["tail"] = nullptr;
    }
    doc["objective"] = r.objective;
    doc["converged"] = r.converged;
    doc["n_iters"] = r.n_iters;

    json rows = json::array();
    for (const auto& row : r.rows) {
        json jr = {{"condition", row.condition}, {"d", row.d_millions},   {"observed", row.observed},
                   {"predicted", row.predicted}, {"residual", row.residual}, {"held_out", row.held_out}};
        if (row.shape) {
            jr["n_enc"] = row.shape->first;
            jr["n_dec"] = row.shape->second;
        } else {
            jr["n_enc"] = nullptr;
            jr["n_dec"] = nullptr;
        }
        rows.push_back(std::move(jr));
    }
    doc["rows"] = rows;

    json analysis = json::object();
    for (const auto& [label, a] : r.analysis) {
        json mv = json::array();
        for (const auto& s : a.marginal_value) mv.push_back({{"d", s.d_millions}, {"value", s.value}});
        analysis[label] = {{"asymptotic_loss", a.asymptotic_loss},
                           {"transition_point", optional_number(a.transition_point)},
                           {"marginal_value", mv}};
    }
    doc["analysis"] = analysis;

    json options = json::object();
    for (const auto& [k, v] : r.provenance.options) options[k] = v;
    doc["provenance"] = {{"input", r.provenance.input},
                         {"tool_version", r.provenance.tool_version},
                         {"config", to_json(r.provenance.config)},
                         {"options", options}};
    return doc;
}

FitReport report_from_json(const json& doc) {
    try {
        if (doc.at("schema").get<int>() != kReportSchema)
            throw Error(ErrorKind::schema, "unsupported report schema");
        FitReport r;
        r.kind = doc.at("kind").get<std::string>();
        for (const auto& [label, law] : doc.at("laws").items()) r.laws[label] = law_from(law);
        r.shared_p = optional_from(doc.at("shared_p"));
        if (const auto& j = doc.at("joint"); !j.is_null()) {
            r.joint = JointLawParams{j.at("alpha").get<double>(), j.at("p").get<double>(),
                                     j.at("beta").get<double>(),  j.at("p_e").get<double>(),
                                     j.at("p_d").get<double>(),   j.at("l_inf").get<double>()};
        }
        if (const auto& t = doc.at("tail"); !t.is_null())
            r.tail = TailLaw{t.at("gamma").get<double>(), t.at("q").get<double>(), t.at("b").get<double>()};
        r.objective = doc.at("objective").get<double>();
        r.converged = doc.at("converged").get<bool>();
        r.n_iters = doc.at("n_iters").get<int>();
        for (const auto& jr : doc.at("rows")) {
            ReportRow row;
            row.condition = jr.at("condition").get<std::string>();
            row.d_millions = jr.at("d").get<double>();
            row.observed = jr.at("observed").get<double>();
            row.predicted = jr.at("predicted").get<double>();
            row.residual = jr.at("residual").get<double>();
            row.held_out = jr.at("held_out").get<bool>();
            if (!jr.at("n_enc").is_null())
                row.shape = ModelShape{jr.at("n_enc").get<std::int64_t>(), jr.at("n_dec").get<std::int64_t>()};
            r.rows.push_back(std::move(row));
        }
        for (const auto& [label, ja] : doc.at("analysis").items()) {
            LawAnalysis a;
            a.asymptotic_loss = ja.at("asymptotic_loss").get<double>();
            a.transition_point = optional_from(ja.at("transition_point"));
            for (const auto& s : ja.at("marginal_value"))
                a.marginal_value.push_back({s.at("d").get<double>(), s.at("value").get<double>()});
            r.analysis[label] = std::move(a);
        }
        const auto& prov = doc.at("provenance");
        r.provenance.input = prov.at("input").get<std::string>();
        r.provenance.tool_version = prov.at("tool_version").get<std::string>();
        r.provenance.config = config_from(prov.at("config"));
        for (const auto& [k, v] : prov.at("options").items()) r.provenance.options[k] = v.get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::schema, std::string("malformed report: ") + e.what());
    }
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

std::string dump_report(const FitReport& report) { return dump_json(to_json(report)); }

FitReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, path + ": " + e.what());
    }
    return report_from_json(doc);
}

}  // namespace datascale
