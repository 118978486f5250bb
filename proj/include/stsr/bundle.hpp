#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "stsr/features.hpp"
#include "stsr/tensor.hpp"

namespace stsr {

// Externally computed perception features plus the final-layer parameters,
// so gradient features can be plugged in over networks trained elsewhere.
// Directory layout: manifest.json naming the tensor files and {d, N, source}.
struct FeatureBundle {
    Tensor z;                         // M x d
    std::vector<std::size_t> labels;  // 0-based internally; 1-based on disk
    PerceptionHead head;
    std::string source;
};

FeatureBundle load_feature_bundle(const std::string& dir);
void save_feature_bundle(const FeatureBundle& bundle, const std::string& dir);

// Benchmark manifest CSV: header "ref_path,dist_path,mos[,mos_std]".
struct PairRecord {
    std::string ref_path;
    std::string dist_path;
    double mos = 0.0;
    std::optional<double> mos_std;
};

std::vector<PairRecord> load_manifest(const std::string& csv_path);

}  // namespace stsr
