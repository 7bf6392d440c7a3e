#pragma once

// Observation tables: CSV ingestion and the synthetic-curve simulator.
//
// CSV header: condition,d_millions,loss[,n_enc,n_dec][,metric][,replicate]
// Columns may appear in any order. The size column may also be named `d`;
// with raw_counts set its values are sentence-pair counts and are divided
// by 1e6.

#include "datascale/analyze.hpp"
#include "datascale/core.hpp"

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace datascale {

struct ObservationTable {
    std::vector<Observation> rows;
    std::vector<std::int64_t> replicate;  // aligned with rows; empty when the column is absent
    std::string source_path;

    std::vector<std::string> conditions() const;  // sorted, unique
    std::vector<Observation> for_condition(const std::string& condition) const;
    std::map<std::string, std::vector<Observation>> by_condition() const;
};

struct LoadOptions {
    bool raw_counts = false;
};

ObservationTable parse_observations(std::istream& in, const std::string& source_name,
                                    const LoadOptions& options = {});
ObservationTable load_observations(const std::string& path, const LoadOptions& options = {});
void write_observations(std::ostream& out, const ObservationTable& table);

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);

struct SimulationSpec {
    std::string condition = "simulated";
    std::vector<double> d_grid;
    std::vector<ModelShape> shapes;  // joint laws only
    double noise_frac = 0.0;
    int replicates = 1;
    std::uint64_t seed = 0;
};

// loss_i = eval(d_i) * (1 + noise_frac * z_i), z_i standard normal drawn from
// the (seed, row) stream. Joint laws emit one curve per shape, labelled
// "<condition>-<n_enc>x<n_dec>".
ObservationTable simulate(const AnyLaw& law, const SimulationSpec& spec);

}  // namespace datascale
