#include "cli.hpp"

#include "datascale/analyze.hpp"
#include "datascale/corpus.hpp"
#include "datascale/error.hpp"
#include "datascale/fit.hpp"
#include "datascale/observations.hpp"
#include "datascale/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace datascale::cli {

namespace {

using nlohmann::json;

constexpr const char* kAlphabetHelp =
    "Character noise replaces a character with one drawn uniformly from the 94 printable ASCII "
    "characters other than space (codes 33-126): a-z, A-Z, 0-9 and !\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~. "
    "A draw may equal the original character.";

constexpr const char* kOrderHelp =
    "Operations compose through pipes in whatever order you run them; noise can be applied "
    "before or after subsampling.";

std::string format_real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

class Output {
public:
    Output(const std::string& path, std::ostream& fallback) {
        if (path.empty() || path == "-") {
            stream_ = &fallback;
        } else {
            file_.open(path, std::ios::binary);
            if (!file_) throw Error(ErrorKind::io, "cannot write '" + path + "'");
            stream_ = &file_;
        }
    }
    std::ostream& get() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

class Input {
public:
    Input(const std::string& path, std::istream& fallback) {
        if (path.empty() || path == "-") {
            stream_ = &fallback;
        } else {
            file_.open(path, std::ios::binary);
            if (!file_) throw Error(ErrorKind::io, "cannot open '" + path + "'");
            stream_ = &file_;
        }
    }
    std::istream& get() { return *stream_; }

private:
    std::ifstream file_;
    std::istream* stream_;
};

ModelShape parse_shape(const std::string& text) {
    const auto x = text.find_first_of("xX");
    if (x == std::string::npos) throw Error(ErrorKind::parse, "shape '" + text + "' is not ENCxDEC");
    std::int64_t enc = 0, dec = 0;
    const auto a = std::from_chars(text.data(), text.data() + x, enc);
    const auto b = std::from_chars(text.data() + x + 1, text.data() + text.size(), dec);
    if (a.ec != std::errc() || a.ptr != text.data() + x || b.ec != std::errc() ||
        b.ptr != text.data() + text.size() || enc <= 0 || dec <= 0)
        throw Error(ErrorKind::parse, "shape '" + text + "' is not ENCxDEC with positive counts");
    return {enc, dec};
}

std::string shape_label(const ModelShape& s) {
    return std::to_string(s.first) + "x" + std::to_string(s.second);
}

// ---------------------------------------------------------------------------
// Shared flag groups

struct FitFlags {
    std::string input;
    bool raw_counts = false;
    std::string loss_space = "log";
    int max_iters = 2000;
    double rel_tol = 1e-10;
    int restarts = 8;
    std::uint64_t seed = 0;
    std::string out = "-";
    std::vector<std::string> conditions;

    FitConfig config() const {
        FitConfig cfg;
        cfg.loss_space = parse_loss_space(loss_space);
        cfg.max_iters = max_iters;
        cfg.rel_tol = rel_tol;
        cfg.n_restarts = restarts;
        cfg.seed = seed;
        return cfg;
    }
};

void add_fit_flags(CLI::App* sub, FitFlags& f, bool multi_condition) {
    sub->add_option("input", f.input, "Observation CSV")->required();
    sub->add_flag("--raw-counts", f.raw_counts, "Size column holds raw sentence-pair counts (divided by 1e6)");
    sub->add_option("--loss-space", f.loss_space, "Residual space")
        ->check(CLI::IsMember({"log", "linear"}))
        ->capture_default_str();
    sub->add_option("--max-iters", f.max_iters, "Solver iteration cap")->capture_default_str();
    sub->add_option("--rel-tol", f.rel_tol, "Relative objective decrease that ends a run")->capture_default_str();
    sub->add_option("--restarts", f.restarts, "Perturbed restarts besides the data-driven start")
        ->capture_default_str();
    sub->add_option("--seed", f.seed, "Seed for restart perturbations")->required();
    sub->add_option("-o,--out", f.out, "Output file ('-' for stdout)")->capture_default_str();
    if (multi_condition) {
        sub->add_option("--condition", f.conditions, "Restrict to these conditions (repeatable)");
    } else {
        sub->add_option("--condition", f.conditions, "Condition to fit when the file holds several")
            ->expected(1);
    }
}

ObservationTable load(const FitFlags& f) {
    return load_observations(f.input, LoadOptions{f.raw_counts});
}

std::vector<Observation> loss_rows(const ObservationTable& table) {
    std::vector<Observation> rows;
    std::copy_if(table.rows.begin(), table.rows.end(), std::back_inserter(rows),
                 [](const Observation& o) { return o.metric == Metric::log_perplexity; });
    return rows;
}

std::vector<Observation> single_condition(const ObservationTable& table, const FitFlags& f) {
    auto rows = loss_rows(table);
    std::set<std::string> labels;
    for (const auto& o : rows) labels.insert(o.condition);
    std::string chosen;
    if (!f.conditions.empty()) {
        chosen = f.conditions.front();
        if (!labels.count(chosen)) throw Error(ErrorKind::schema, "no rows for condition '" + chosen + "'");
    } else if (labels.size() == 1) {
        chosen = *labels.begin();
    } else {
        throw Error(ErrorKind::schema, "file holds several conditions; pick one with --condition");
    }
    std::erase_if(rows, [&](const Observation& o) { return o.condition != chosen; });
    return rows;
}

Provenance provenance(const FitFlags& f) {
    Provenance p;
    p.input = f.input;
    p.config = f.config();
    if (f.raw_counts) p.options["raw_counts"] = "true";
    return p;
}

std::vector<double> distinct_sizes(std::span<const Observation> obs) {
    std::set<double> d;
    for (const auto& o : obs) d.insert(o.d_millions);
    return {d.begin(), d.end()};
}

int finish(const FitReport& report, const std::string& out_path, std::ostream& out) {
    Output sink(out_path, out);
    sink.get() << dump_report(report);
    return report.converged ? kOk : kNotConverged;
}

// ---------------------------------------------------------------------------
// Fit commands

int cmd_fit(const FitFlags& f, std::ostream& out) {
    const auto table = load(f);
    const auto obs = single_condition(table, f);
    const auto cfg = f.config();
    const auto fit = fit_single(obs, cfg);

    FitReport r;
    r.kind = "fit";
    const auto& label = obs.front().condition;
    r.laws[label] = fit.law;
    r.objective = fit.objective;
    r.converged = fit.converged;
    r.n_iters = fit.n_iters;
    for (std::size_t i = 0; i < obs.size(); ++i)
        r.rows.push_back({label, obs[i].d_millions, obs[i].loss, eval_law(fit.law, obs[i].d_millions),
                          fit.residuals[i], std::nullopt, false});
    r.analysis[label] = analyze_law(fit.law, distinct_sizes(obs));
    r.provenance = provenance(f);
    return finish(r, f.out, out);
}

int cmd_fit_shared(const FitFlags& f, std::ostream& out) {
    const auto table = load(f);
    std::map<std::string, std::vector<Observation>> groups;
    for (const auto& o : loss_rows(table)) {
        if (!f.conditions.empty() &&
            std::find(f.conditions.begin(), f.conditions.end(), o.condition) == f.conditions.end())
            continue;
        groups[o.condition].push_back(o);
    }
    for (const auto& c : f.conditions)
        if (!groups.count(c)) throw Error(ErrorKind::schema, "no rows for condition '" + c + "'");
    const auto fit = fit_shared(groups, f.config());

    FitReport r;
    r.kind = "fit-shared";
    r.shared_p = fit.p;
    r.objective = fit.objective;
    r.converged = fit.converged;
    r.n_iters = fit.n_iters;
    for (const auto& [label, obs] : groups) {
        const auto law = fit.law_for(label);
        r.laws[label] = law;
        const auto& res = fit.residuals.at(label);
        for (std::size_t i = 0; i < obs.size(); ++i)
            r.rows.push_back({label, obs[i].d_millions, obs[i].loss, eval_law(law, obs[i].d_millions), res[i],
                              std::nullopt, false});
        r.analysis[label] = analyze_law(law, distinct_sizes(obs));
    }
    r.provenance = provenance(f);
    return finish(r, f.out, out);
}

struct JointFlags {
    CapacityLaw fixed;
    std::vector<std::string> hold_out;
};

int cmd_fit_joint(const FitFlags& f, const JointFlags& j, std::ostream& out) {
    const auto table = load(f);
    auto obs = loss_rows(table);
    if (!f.conditions.empty())
        std::erase_if(obs, [&](const Observation& o) {
            return std::find(f.conditions.begin(), f.conditions.end(), o.condition) == f.conditions.end();
        });
    std::vector<ModelShape> hold;
    for (const auto& h : j.hold_out) hold.push_back(parse_shape(h));
    const auto fit = fit_joint(obs, j.fixed, f.config(), hold);
    const auto params = fit.params(j.fixed);

    FitReport r;
    r.kind = "fit-joint";
    r.joint = params;
    r.objective = fit.objective;
    r.converged = fit.converged;
    r.n_iters = fit.n_iters;
    std::map<std::string, std::vector<Observation>> by_shape;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto& o = obs[i];
        const ModelShape shape{*o.n_enc, *o.n_dec};
        by_shape[shape_label(shape)].push_back(o);
        r.rows.push_back({o.condition, o.d_millions, o.loss, eval_joint_law(params, shape.first, shape.second, o.d_millions),
                          fit.residuals[i], shape, !fit.in_sample[i]});
    }
    for (const auto& [label, rows] : by_shape) {
        const PowerLaw law{params.alpha, joint_capacity(params, *rows.front().n_enc, *rows.front().n_dec), params.p};
        r.laws[label] = law;
        r.analysis[label] = analyze_law(law, distinct_sizes(rows));
    }
    r.provenance = provenance(f);
    r.provenance.options["beta"] = format_real(j.fixed.beta);
    r.provenance.options["p_e"] = format_real(j.fixed.p_e);
    r.provenance.options["p_d"] = format_real(j.fixed.p_d);
    r.provenance.options["l_inf"] = format_real(j.fixed.l_inf);
    if (!j.hold_out.empty()) {
        std::string joined;
        for (const auto& s : hold) joined += (joined.empty() ? "" : ",") + shape_label(s);
        r.provenance.options["hold_out"] = joined;
    }
    return finish(r, f.out, out);
}

int cmd_fit_tail(const FitFlags& f, double d_min, std::ostream& out) {
    const auto table = load(f);
    const auto obs = single_condition(table, f);
    const auto fit = fit_tail(obs, d_min, f.config());

    FitReport r;
    r.kind = "fit-tail";
    r.tail = fit.law;
    r.objective = fit.objective;
    r.converged = fit.converged;
    r.n_iters = fit.n_iters;
    std::size_t k = 0;
    for (const auto& o : obs) {
        if (o.d_millions < d_min) continue;
        r.rows.push_back({o.condition, o.d_millions, o.loss, eval_tail(fit.law, o.d_millions), fit.residuals[k++],
                          std::nullopt, false});
    }
    r.provenance = provenance(f);
    r.provenance.options["d_min"] = format_real(d_min);
    return finish(r, f.out, out);
}

struct LinearFlags {
    std::string input;
    bool raw_counts = false;
    std::string out = "-";
};

// Pairs each log-perplexity row with the BLEU row of the same
// (condition, d, replicate) and regresses BLEU on loss.
int cmd_fit_linear(const LinearFlags& f, std::ostream& out) {
    const auto table = load_observations(f.input, LoadOptions{f.raw_counts});
    using Key = std::tuple<std::string, double, std::int64_t>;
    std::map<Key, double> loss, bleu;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& o = table.rows[i];
        const Key key{o.condition, o.d_millions, table.replicate.empty() ? 0 : table.replicate[i]};
        (o.metric == Metric::bleu ? bleu : loss)[key] = o.loss;
    }
    std::vector<double> x, y;
    for (const auto& [key, l] : loss) {
        const auto it = bleu.find(key);
        if (it == bleu.end()) continue;
        x.push_back(l);
        y.push_back(it->second);
    }
    const auto fit = fit_linear(x, y);
    json doc = {{"schema", kReportSchema},
                {"kind", "fit-linear"},
                {"slope", fit.slope},
                {"intercept", fit.intercept},
                {"r2", fit.r2},
                {"n_points", x.size()},
                {"provenance", {{"input", f.input}, {"tool_version", kToolVersion}}}};
    Output sink(f.out, out);
    sink.get() << dump_json(doc);
    return kOk;
}

// ---------------------------------------------------------------------------
// Analysis

struct AnalyzeFlags {
    std::string report;
    std::string condition;
    std::vector<double> law;
    std::vector<double> d;
    std::vector<std::string> equivalence;
    std::string out = "-";
};

json law_json(const PowerLaw& law) { return {{"alpha", law.alpha}, {"c", law.c}, {"p", law.p}}; }

// "path" or "path#condition"
PowerLaw law_from_ref(const std::string& ref) {
    const auto hash = ref.find('#');
    const auto path = ref.substr(0, hash);
    const auto report = load_report(path);
    if (hash == std::string::npos) return report.law();
    return report.law(ref.substr(hash + 1));
}

int cmd_analyze(const AnalyzeFlags& f, std::ostream& out) {
    json doc = {{"schema", kReportSchema}, {"kind", "analyze"}, {"tool_version", kToolVersion}};
    if (!f.equivalence.empty()) {
        const auto first = law_from_ref(f.equivalence[0]);
        const auto second = law_from_ref(f.equivalence[1]);
        doc["data_equivalence_factor"] = data_equivalence_factor(first, second);
        doc["laws"] = {{"first", law_json(first)}, {"second", law_json(second)}};
        doc["inputs"] = f.equivalence;
    } else {
        PowerLaw law;
        std::vector<double> samples = f.d;
        if (!f.law.empty()) {
            if (f.law.size() != 3) throw Error(ErrorKind::parse, "--law takes alpha,c,p");
            law = {f.law[0], f.law[1], f.law[2]};
            validate(law);
        } else if (!f.report.empty()) {
            const auto report = load_report(f.report);
            law = report.law(f.condition.empty() ? std::nullopt : std::optional(f.condition));
            if (samples.empty()) {
                std::set<double> d;
                for (const auto& row : report.rows)
                    if (f.condition.empty() || row.condition == f.condition) d.insert(row.d_millions);
                samples.assign(d.begin(), d.end());
            }
            doc["input"] = f.report;
        } else {
            throw Error(ErrorKind::parse, "give a report, --law, or --equivalence");
        }
        const auto a = analyze_law(law, samples);
        doc["law"] = law_json(law);
        doc["asymptotic_loss"] = a.asymptotic_loss;
        doc["transition_point"] = a.transition_point ? json(*a.transition_point) : json(nullptr);
        json mv = json::array();
        for (const auto& s : a.marginal_value) mv.push_back({{"d", s.d_millions}, {"value", s.value}});
        doc["marginal_value"] = mv;
    }
    Output sink(f.out, out);
    sink.get() << dump_json(doc);
    return kOk;
}

int cmd_mc(const FitFlags& f, const McConfig& mc_in, std::ostream& out) {
    const auto table = load(f);
    const auto obs = single_condition(table, f);
    auto mc = mc_in;
    mc.seed = f.seed;
    const auto s = mc_uncertainty(obs, f.config(), mc);
    json doc = {{"schema", kReportSchema},
                {"kind", "mc"},
                {"condition", obs.front().condition},
                {"mean_p", s.mean_p},
                {"std_p", s.std_p},
                {"quantiles", {{"q05", s.quantiles[0]}, {"q50", s.quantiles[1]}, {"q95", s.quantiles[2]}}},
                {"n_converged", s.n_converged},
                {"n_reps", s.n_reps},
                {"noise_frac", mc.noise_frac},
                {"provenance",
                 {{"input", f.input}, {"tool_version", kToolVersion}, {"config", to_json(f.config())}}}};
    Output sink(f.out, out);
    sink.get() << dump_json(doc);
    return kOk;
}

// ---------------------------------------------------------------------------
// Simulation and rendering

struct SimulateFlags {
    double alpha = 0, c = 0, p = 0;
    std::optional<double> beta;
    double p_e = 0, p_d = 0, l_inf = 0;
    std::vector<std::string> shapes;
    std::vector<double> d;
    std::string doubling;
    double noise_frac = 0;
    int replicates = 1;
    std::string condition = "simulated";
    std::uint64_t seed = 0;
    std::string out = "-";
};

std::vector<double> doubling_grid(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw Error(ErrorKind::parse, "--d-doubling takes LO:HI");
    double lo = 0, hi = 0;
    const auto a = std::from_chars(spec.data(), spec.data() + colon, lo);
    const auto b = std::from_chars(spec.data() + colon + 1, spec.data() + spec.size(), hi);
    if (a.ec != std::errc() || b.ec != std::errc() || !(lo > 0) || !(hi >= lo))
        throw Error(ErrorKind::parse, "--d-doubling takes LO:HI with 0 < LO <= HI");
    std::vector<double> d;
    for (double x = lo; x <= hi * (1 + 1e-12); x *= 2) d.push_back(x);
    return d;
}

int cmd_simulate(const SimulateFlags& f, std::ostream& out) {
    SimulationSpec spec;
    spec.condition = f.condition;
    spec.d_grid = f.d;
    if (!f.doubling.empty()) {
        const auto g = doubling_grid(f.doubling);
        spec.d_grid.insert(spec.d_grid.end(), g.begin(), g.end());
    }
    spec.noise_frac = f.noise_frac;
    spec.replicates = f.replicates;
    spec.seed = f.seed;
    AnyLaw law = PowerLaw{f.alpha, f.c, f.p};
    if (f.beta) {
        law = JointLawParams{f.alpha, f.p, *f.beta, f.p_e, f.p_d, f.l_inf};
        for (const auto& s : f.shapes) spec.shapes.push_back(parse_shape(s));
    } else if (!f.shapes.empty()) {
        throw Error(ErrorKind::schema, "--shape needs the joint-law flags (--beta, --p-e, --p-d, --l-inf)");
    }
    const auto table = simulate(law, spec);
    Output sink(f.out, out);
    write_observations(sink.get(), table);
    return kOk;
}

int cmd_report(const std::string& path, const std::string& out_path, std::ostream& out) {
    const auto report = load_report(path);
    Output sink(out_path, out);
    auto& os = sink.get();
    os << "condition,d,observed,predicted,residual\n";
    for (const auto& row : report.rows)
        os << row.condition << ',' << format_real(row.d_millions) << ',' << format_real(row.observed) << ','
           << format_real(row.predicted) << ',' << format_real(row.residual) << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// Corpus

struct CorpusFlags {
    std::string input = "-";
    std::string output = "-";
    std::string kind;
    std::string side = "source";
    std::optional<double> prob;
    std::uint64_t seed = 0;
    double fraction = 0.5;
    std::size_t size = 0;
};

CorruptionKind parse_kind(std::string text) {
    std::replace(text.begin(), text.end(), '-', '_');
    if (text == "char_noise") return CorruptionKind::char_noise;
    if (text == "word_delete") return CorruptionKind::word_delete;
    if (text == "pair_shuffle") return CorruptionKind::pair_shuffle;
    throw Error(ErrorKind::parse, "unknown corruption kind '" + text + "'");
}

double default_prob(CorruptionKind kind) {
    return kind == CorruptionKind::word_delete ? 0.15 : 0.1;
}

int cmd_corrupt(const CorpusFlags& f, std::istream& in, std::ostream& out) {
    CorruptionSpec spec;
    spec.kind = parse_kind(f.kind);
    spec.side = f.side == "target" ? Side::target : Side::source;
    spec.prob = f.prob.value_or(default_prob(spec.kind));
    spec.seed = f.seed;
    validate(spec);

    Input source(f.input, in);
    Output sink(f.output, out);
    if (spec.kind == CorruptionKind::pair_shuffle) {
        const auto pairs = read_corpus(source.get());
        write_corpus(sink.get(), shuffle_pairs(pairs, spec));
        return kOk;
    }
    CorpusReader reader(source.get());
    while (auto pair = reader.next()) {
        write_pair(sink.get(), spec.kind == CorruptionKind::char_noise ? corrupt_chars(*pair, spec)
                                                                       : delete_words(*pair, spec));
    }
    return kOk;
}

int cmd_filter(const CorpusFlags& f, std::istream& in, std::ostream& out) {
    Input source(f.input, in);
    const auto pairs = read_corpus(source.get());
    const auto kept = filter_top_fraction(pairs, f.fraction);
    Output sink(f.output, out);
    write_corpus(sink.get(), kept);
    return kOk;
}

int cmd_sample(const CorpusFlags& f, std::istream& in, std::ostream& out) {
    Input source(f.input, in);
    SubsetSampler sampler(f.size, f.seed);
    CorpusReader reader(source.get());
    while (auto pair = reader.next()) sampler.offer(*pair);
    const auto sample = std::move(sampler).take();
    Output sink(f.output, out);
    write_corpus(sink.get(), sample);
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fit, analyze and stress-test data scaling laws of the form alpha * (1/D + C)^p, "
                 "with D in millions of sentence pairs.",
                 "datascale"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    FitFlags fit_flags;
    auto* fit = app.add_subcommand("fit", "Fit one condition's scaling law");
    add_fit_flags(fit, fit_flags, false);

    FitFlags shared_flags;
    auto* shared = app.add_subcommand("fit-shared", "Fit all conditions with one common exponent");
    add_fit_flags(shared, shared_flags, true);

    FitFlags joint_flags;
    JointFlags joint;
    auto* fit_joint_cmd = app.add_subcommand(
        "fit-joint", "Fit alpha and p of the joint law, C = beta * (n_enc^-p_e * n_dec^-p_d + l_inf)^(1/p)");
    add_fit_flags(fit_joint_cmd, joint_flags, true);
    fit_joint_cmd->add_option("--beta", joint.fixed.beta, "Capacity constant beta")->required();
    fit_joint_cmd->add_option("--p-e", joint.fixed.p_e, "Encoder exponent")->required();
    fit_joint_cmd->add_option("--p-d", joint.fixed.p_d, "Decoder exponent")->required();
    fit_joint_cmd->add_option("--l-inf", joint.fixed.l_inf, "Irreducible term L_inf")->required();
    fit_joint_cmd->add_option("--hold-out", joint.hold_out, "Exclude shape ENCxDEC from fitting (repeatable)");

    FitFlags tail_flags;
    double d_min = 0;
    auto* tail = app.add_subcommand("fit-tail", "Fit gamma * D^-q + B to the sizes at or above --d-min");
    add_fit_flags(tail, tail_flags, false);
    tail->add_option("--d-min", d_min, "Smallest size (millions) included")->required();

    LinearFlags linear_flags;
    auto* linear = app.add_subcommand("fit-linear", "Regress BLEU on log-perplexity (rows paired by condition, d)");
    linear->add_option("input", linear_flags.input, "Observation CSV with a metric column")->required();
    linear->add_flag("--raw-counts", linear_flags.raw_counts, "Size column holds raw counts");
    linear->add_option("-o,--out", linear_flags.out, "Output file")->capture_default_str();

    AnalyzeFlags analyze_flags;
    auto* analyze = app.add_subcommand("analyze", "Asymptote, transition point, marginal value, equivalence factor");
    analyze->add_option("report", analyze_flags.report, "Fit report (JSON)");
    analyze->add_option("--condition", analyze_flags.condition, "Law to analyze in a multi-condition report");
    analyze->add_option("--law", analyze_flags.law, "Analyze alpha,c,p directly")->delimiter(',')->expected(3);
    analyze->add_option("--d", analyze_flags.d, "Sizes for marginal values (comma separated)")->delimiter(',');
    analyze->add_option("--equivalence", analyze_flags.equivalence,
                        "Two laws REPORT[#CONDITION] sharing p; prints (alpha1/alpha2)^(1/p)")
        ->expected(2);
    analyze->add_option("-o,--out", analyze_flags.out, "Output file")->capture_default_str();

    FitFlags mc_flags;
    McConfig mc;
    auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo spread of the fitted exponent under Normal(l, f*l) noise");
    add_fit_flags(mc_cmd, mc_flags, false);
    mc_cmd->add_option("--noise-frac", mc.noise_frac, "Relative loss noise")->capture_default_str();
    mc_cmd->add_option("--n-reps", mc.n_reps, "Replicates")->capture_default_str();

    SimulateFlags sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Emit observations from a known law");
    simulate_cmd->add_option("--alpha", sim.alpha, "alpha")->required();
    simulate_cmd->add_option("--c", sim.c, "C (data law only)");
    simulate_cmd->add_option("--p", sim.p, "p")->required();
    simulate_cmd->add_option("--beta", sim.beta, "Joint law: beta");
    simulate_cmd->add_option("--p-e", sim.p_e, "Joint law: encoder exponent");
    simulate_cmd->add_option("--p-d", sim.p_d, "Joint law: decoder exponent");
    simulate_cmd->add_option("--l-inf", sim.l_inf, "Joint law: L_inf");
    simulate_cmd->add_option("--shape", sim.shapes, "Joint law: model shape ENCxDEC (repeatable)");
    simulate_cmd->add_option("--d", sim.d, "Sizes in millions (comma separated)")->delimiter(',');
    simulate_cmd->add_option("--d-doubling", sim.doubling, "Doubling grid LO:HI, e.g. 1:512");
    simulate_cmd->add_option("--noise-frac", sim.noise_frac, "Relative Gaussian noise")->capture_default_str();
    simulate_cmd->add_option("--replicates", sim.replicates, "Draws per size")->capture_default_str();
    simulate_cmd->add_option("--condition", sim.condition, "Condition label")->capture_default_str();
    simulate_cmd->add_option("--seed", sim.seed, "Noise seed")->required();
    simulate_cmd->add_option("-o,--out", sim.out, "Output CSV")->capture_default_str();

    std::string report_path, report_out = "-";
    auto* report = app.add_subcommand("report", "Render a fit report as CSV: condition,d,observed,predicted,residual");
    report->add_option("report", report_path, "Fit report (JSON)")->required();
    report->add_option("-o,--out", report_out, "Output file")->capture_default_str();

    CorpusFlags corpus_flags;
    auto* corpus = app.add_subcommand("corpus", "TAB-separated parallel corpus tools (source\\ttarget[\\tscore])");
    corpus->footer(kOrderHelp);
    corpus->require_subcommand(1);
    auto add_io = [&](CLI::App* sub) {
        sub->add_option("-i,--input", corpus_flags.input, "Input corpus ('-' for stdin)")->capture_default_str();
        sub->add_option("-o,--output", corpus_flags.output, "Output corpus ('-' for stdout)")->capture_default_str();
    };
    auto* corrupt_cmd = corpus->add_subcommand("corrupt", "Inject character, word or alignment noise");
    corrupt_cmd->footer(kAlphabetHelp);
    add_io(corrupt_cmd);
    corrupt_cmd->add_option("--kind", corpus_flags.kind, "char_noise | word_delete | pair_shuffle")
        ->required()
        ->check(CLI::IsMember({"char_noise", "word_delete", "pair_shuffle", "char-noise", "word-delete", "pair-shuffle"}));
    corrupt_cmd->add_option("--side", corpus_flags.side, "source | target (ignored for pair_shuffle)")
        ->check(CLI::IsMember({"source", "target"}))
        ->capture_default_str();
    corrupt_cmd->add_option("--prob", corpus_flags.prob,
                            "Noise probability (defaults 0.1 char_noise, 0.15 word_delete, 0.1 pair_shuffle)");
    corrupt_cmd->add_option("--seed", corpus_flags.seed, "Master seed")->required();
    auto* filter_cmd = corpus->add_subcommand("filter", "Keep the top fraction of pairs by score");
    add_io(filter_cmd);
    filter_cmd->add_option("--fraction", corpus_flags.fraction, "Fraction in (0, 1]")->capture_default_str();
    auto* sample_cmd = corpus->add_subcommand("sample", "Uniform sample without replacement");
    add_io(sample_cmd);
    sample_cmd->add_option("--size", corpus_flags.size, "Number of pairs")->required();
    sample_cmd->add_option("--seed", corpus_flags.seed, "Sampling seed")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (fit->parsed()) return cmd_fit(fit_flags, out);
        if (shared->parsed()) return cmd_fit_shared(shared_flags, out);
        if (fit_joint_cmd->parsed()) return cmd_fit_joint(joint_flags, joint, out);
        if (tail->parsed()) return cmd_fit_tail(tail_flags, d_min, out);
        if (linear->parsed()) return cmd_fit_linear(linear_flags, out);
        if (analyze->parsed()) return cmd_analyze(analyze_flags, out);
        if (mc_cmd->parsed()) return cmd_mc(mc_flags, mc, out);
        if (simulate_cmd->parsed()) return cmd_simulate(sim, out);
        if (report->parsed()) return cmd_report(report_path, report_out, out);
        if (corrupt_cmd->parsed()) return cmd_corrupt(corpus_flags, in, out);
        if (filter_cmd->parsed()) return cmd_filter(corpus_flags, in, out);
        if (sample_cmd->parsed()) return cmd_sample(corpus_flags, in, out);
    } catch (const Error& e) {
        err << "datascale: " << e.what() << '\n';
        return e.kind() == ErrorKind::mc_failure ? kNotConverged : kInvalid;
    }
    return kInvalid;
}

}  // namespace datascale::cli
