#include "datascale/observations.hpp"
#include "datascale/error.hpp"
#include "datascale/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace datascale {

namespace {

constexpr int kMaxRedraws = 100;

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    for (;;) {
        const auto comma = line.find(',');
        out.push_back(trim(line.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        line.remove_prefix(comma + 1);
    }
    return out;
}

[[noreturn]] void row_error(std::size_t row, const std::string& msg) {
    std::ostringstream os;
    os << "row " << row << ": " << msg;
    throw Error(ErrorKind::parse, os.str());
}

double parse_real(std::string_view text, std::size_t row, const char* column) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v))
        row_error(row, std::string(column) + " '" + std::string(text) + "' is not a number");
    return v;
}

std::int64_t parse_integer(std::string_view text, std::size_t row, const char* column) {
    std::int64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec == std::errc() && res.ptr == text.data() + text.size() && !text.empty()) return v;
    // Accept integral reals such as 1e8 for parameter counts.
    const double r = parse_real(text, row, column);
    if (r != std::floor(r) || std::abs(r) > 9.0e18)
        row_error(row, std::string(column) + " '" + std::string(text) + "' is not an integer");
    return static_cast<std::int64_t>(r);
}

std::string format_real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string_view to_string(Metric metric) {
    return metric == Metric::bleu ? "bleu" : "log_perplexity";
}

Metric parse_metric(std::string_view text) {
    if (text == "log_perplexity") return Metric::log_perplexity;
    if (text == "bleu") return Metric::bleu;
    throw Error(ErrorKind::parse, "unknown metric '" + std::string(text) + "'");
}

std::vector<std::string> ObservationTable::conditions() const {
    std::set<std::string> labels;
    for (const auto& o : rows) labels.insert(o.condition);
    return {labels.begin(), labels.end()};
}

std::vector<Observation> ObservationTable::for_condition(const std::string& condition) const {
    std::vector<Observation> out;
    std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
                 [&](const Observation& o) { return o.condition == condition; });
    return out;
}

std::map<std::string, std::vector<Observation>> ObservationTable::by_condition() const {
    std::map<std::string, std::vector<Observation>> out;
    for (const auto& o : rows) out[o.condition].push_back(o);
    return out;
}

ObservationTable parse_observations(std::istream& in, const std::string& source_name,
                                    const LoadOptions& options) {
    ObservationTable table;
    table.source_path = source_name;

    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::parse, source_name + ": empty file");
    const auto header = split_csv(line);
    std::map<std::string, std::size_t, std::less<>> column;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (!column.emplace(std::string(header[i]), i).second)
            throw Error(ErrorKind::parse, "duplicate column '" + std::string(header[i]) + "'");
    }
    const auto find = [&](std::string_view name) -> std::optional<std::size_t> {
        const auto it = column.find(name);
        return it == column.end() ? std::nullopt : std::optional(it->second);
    };
    const auto require = [&](std::string_view name) {
        const auto c = find(name);
        if (!c) throw Error(ErrorKind::parse, "missing required column '" + std::string(name) + "'");
        return *c;
    };

    const auto col_condition = require("condition");
    auto col_d = find("d_millions");
    if (!col_d) col_d = find("d");
    if (!col_d) throw Error(ErrorKind::parse, "missing required column 'd_millions' (or 'd')");
    const auto col_loss = require("loss");
    const auto col_enc = find("n_enc");
    const auto col_dec = find("n_dec");
    if (col_enc.has_value() != col_dec.has_value())
        throw Error(ErrorKind::parse, "columns n_enc and n_dec must appear together");
    const auto col_metric = find("metric");
    const auto col_replicate = find("replicate");

    std::set<std::tuple<std::string, double, std::int64_t, std::int64_t, std::int64_t, int>> seen;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != header.size()) {
            std::ostringstream os;
            os << "expected " << header.size() << " fields, got " << fields.size();
            row_error(row, os.str());
        }
        Observation o;
        o.condition = std::string(fields[col_condition]);
        if (o.condition.empty()) row_error(row, "empty condition label");
        o.d_millions = parse_real(fields[*col_d], row, "d");
        if (options.raw_counts) o.d_millions /= 1e6;
        o.loss = parse_real(fields[col_loss], row, "loss");
        if (col_enc) {
            const auto enc = fields[*col_enc];
            const auto dec = fields[*col_dec];
            if (enc.empty() != dec.empty()) row_error(row, "n_enc and n_dec must be given together");
            if (!enc.empty()) {
                o.n_enc = parse_integer(enc, row, "n_enc");
                o.n_dec = parse_integer(dec, row, "n_dec");
            }
        }
        if (col_metric && !fields[*col_metric].empty()) {
            try {
                o.metric = parse_metric(fields[*col_metric]);
            } catch (const Error& e) {
                row_error(row, e.what());
            }
        }
        std::int64_t rep = 0;
        if (col_replicate) {
            rep = parse_integer(fields[*col_replicate], row, "replicate");
            table.replicate.push_back(rep);
        }
        try {
            validate(o);
        } catch (const Error& e) {
            row_error(row, e.what());
        }
        const auto key = std::make_tuple(o.condition, o.d_millions, rep, o.n_enc.value_or(0),
                                         o.n_dec.value_or(0), static_cast<int>(o.metric));
        if (!seen.insert(key).second)
            row_error(row, "repeats (condition, d) of an earlier row; add a replicate column");
        table.rows.push_back(std::move(o));
    }
    return table;
}

ObservationTable load_observations(const std::string& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
    return parse_observations(in, path, options);
}

void write_observations(std::ostream& out, const ObservationTable& table) {
    const bool shapes = std::any_of(table.rows.begin(), table.rows.end(),
                                    [](const Observation& o) { return o.has_shape(); });
    const bool metrics = std::any_of(table.rows.begin(), table.rows.end(),
                                     [](const Observation& o) { return o.metric != Metric::log_perplexity; });
    const bool replicates = !table.replicate.empty();

    out << "condition,d_millions,loss";
    if (shapes) out << ",n_enc,n_dec";
    if (metrics) out << ",metric";
    if (replicates) out << ",replicate";
    out << '\n';
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& o = table.rows[i];
        out << o.condition << ',' << format_real(o.d_millions) << ',' << format_real(o.loss);
        if (shapes) {
            out << ',';
            if (o.n_enc) out << *o.n_enc;
            out << ',';
            if (o.n_dec) out << *o.n_dec;
        }
        if (metrics) out << ',' << to_string(o.metric);
        if (replicates) out << ',' << table.replicate[i];
        out << '\n';
    }
}

ObservationTable simulate(const AnyLaw& law, const SimulationSpec& spec) {
    if (spec.d_grid.empty()) throw Error(ErrorKind::domain, "empty d grid");
    if (!(spec.noise_frac >= 0.0) || !std::isfinite(spec.noise_frac))
        throw Error(ErrorKind::domain, "noise_frac must be non-negative");
    if (spec.replicates < 1) throw Error(ErrorKind::domain, "replicates must be at least 1");

    const bool joint = std::holds_alternative<JointLawParams>(law);
    if (joint) {
        validate(std::get<JointLawParams>(law));
        if (spec.shapes.empty()) throw Error(ErrorKind::domain, "joint simulation needs at least one shape");
    } else {
        validate(std::get<PowerLaw>(law));
        if (!spec.shapes.empty()) throw Error(ErrorKind::schema, "shapes given for a data-only law");
    }

    std::vector<std::optional<ModelShape>> shapes;
    if (joint) {
        for (const auto& s : spec.shapes) shapes.emplace_back(s);
    } else {
        shapes.emplace_back(std::nullopt);
    }

    ObservationTable table;
    table.source_path = "simulate";
    std::uint64_t row = 0;
    for (const auto& shape : shapes) {
        for (const double d : spec.d_grid) {
            for (int rep = 0; rep < spec.replicates; ++rep, ++row) {
                const double clean = predict(law, LawQuery{d, shape});
                Observation o;
                o.condition = spec.condition;
                if (shape) {
                    o.condition += "-" + std::to_string(shape->first) + "x" + std::to_string(shape->second);
                    o.n_enc = shape->first;
                    o.n_dec = shape->second;
                }
                o.d_millions = d;
                o.loss = clean;
                if (spec.noise_frac > 0.0) {
                    auto rng = stream_for(spec.seed, row);
                    int attempt = 0;
                    do {
                        o.loss = clean * (1.0 + spec.noise_frac * rng.normal());
                    } while (!(o.loss > 0.0) && ++attempt < kMaxRedraws);
                    if (!(o.loss > 0.0))
                        throw Error(ErrorKind::domain, "noise too large: could not draw a positive loss");
                }
                table.rows.push_back(std::move(o));
                if (spec.replicates > 1) table.replicate.push_back(rep);
            }
        }
    }
    return table;
}

}  // namespace datascale
