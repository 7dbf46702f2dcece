#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "densemu/decomposition.hpp"
#include "densemu/toy_models.hpp"

namespace densemu {

enum class CampaignKind { KrSweep, DecompSweep, MmpVsRandom, LooValidate };

const char* campaign_name(CampaignKind k);

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// External data: a design matrix plus either raw replicate rows (densities
// built by kernel estimation) or an already-discretized density matrix
// whose first row holds the grid nodes.
struct DatasetSpec {
    std::string design_path;
    std::string replicates_path;
    std::string densities_path;
};

struct CampaignConfig {
    CampaignKind kind = CampaignKind::KrSweep;
    std::optional<std::string> model;  // toy1 | toy2 | gauss
    std::optional<DatasetSpec> dataset;

    std::vector<std::size_t> sizes;  // nested design sizes / learning sizes
    std::size_t test_points = 0;
    std::size_t repetitions = 1;
    std::size_t q_min = 1, q_max = 1;
    std::vector<DecompMethod> methods;
    Metric metric = Metric::L2;
    std::string bandwidth_mode = "isotropic";  // isotropic | anisotropic | both
    std::size_t replicates = 10000;
    std::size_t random_bases = 20;
    std::size_t grid_m = 512;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::string out_dir = "out";
};

// Reads the JSON config and validates it for the given campaign kind.
CampaignConfig parse_config_file(const std::string& path, CampaignKind kind);
void validate_config(const CampaignConfig& cfg);

// One long-format result cell; fields that do not apply stay at -1.
struct ResultRecord {
    std::string method;
    long n = -1;
    long q = -1;
    long rep = -1;
    long point = -1;
    std::size_t quantity = 0;
    double value = 0.0;
};

struct ResultTable {
    std::vector<ResultRecord> records;
    std::vector<std::string> report;  // human-readable [pass]/[warn] lines
};

ResultTable run_kr_sweep(const CampaignConfig& cfg);
ResultTable run_decomp_sweep(const CampaignConfig& cfg);
ResultTable run_mmp_vs_random(const CampaignConfig& cfg);
ResultTable run_loo_validate(const CampaignConfig& cfg);
ResultTable run_campaign(const CampaignConfig& cfg);

TrainingSet ingest_dataset(const DatasetSpec& spec, std::size_t grid_m = 512);

// results.csv (sorted long format), aggregates.csv (per-cell stats over
// repetition means) and summary.json; reruns with the same config and
// seed are byte-identical.
void write_results(const ResultTable& table, const CampaignConfig& cfg,
                   const std::string& out_dir);

}  // namespace densemu
