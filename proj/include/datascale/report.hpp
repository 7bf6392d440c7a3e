#pragma once

// JSON fit reports. Serialization is key-sorted with shortest round-trip
// number formatting, so identical inputs give byte-identical files and
// parse -> serialize is a fixed point.

#include "datascale/core.hpp"
#include "datascale/fit.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace datascale {

inline constexpr int kReportSchema = 1;
inline constexpr const char* kToolVersion = "datascale 1.0.0";

struct ReportRow {
    std::string condition;
    double d_millions = 0.0;
    double observed = 0.0;
    double predicted = 0.0;
    double residual = 0.0;
    std::optional<ModelShape> shape;
    bool held_out = false;
};

struct MarginalSample {
    double d_millions = 0.0;
    double value = 0.0;
};

struct LawAnalysis {
    double asymptotic_loss = 0.0;
    std::optional<double> transition_point;
    std::vector<MarginalSample> marginal_value;
};

struct Provenance {
    std::string input;
    std::string tool_version = kToolVersion;
    FitConfig config;
    std::map<std::string, std::string> options;  // command-specific flags
};

struct FitReport {
    std::string kind;                       // fit, fit-shared, fit-joint, fit-tail
    std::map<std::string, PowerLaw> laws;   // per condition (per shape for joint fits)
    std::optional<double> shared_p;
    std::optional<JointLawParams> joint;
    std::optional<TailLaw> tail;
    double objective = 0.0;
    bool converged = false;
    int n_iters = 0;
    std::vector<ReportRow> rows;
    std::map<std::string, LawAnalysis> analysis;
    Provenance provenance;

    // The single law in the report, or the one named by `condition`.
    PowerLaw law(const std::optional<std::string>& condition = std::nullopt) const;
};

LawAnalysis analyze_law(const PowerLaw& law, const std::vector<double>& d_samples);

nlohmann::json to_json(const FitReport& report);
FitReport report_from_json(const nlohmann::json& doc);

std::string dump_json(const nlohmann::json& doc);
std::string dump_report(const FitReport& report);
FitReport load_report(const std::string& path);

nlohmann::json to_json(const FitConfig& cfg);

std::string_view to_string(LossSpace space);
LossSpace parse_loss_space(std::string_view text);

}  // namespace datascale
