#pragma once

// Subcommand implementations behind the lmfrank CLI. Each writes its fixed
// output files under RunConfig::output_dir:
//   train  -> model.bin, train.log
//   cv     -> metrics.txt, metrics.kv
//   rank   -> rankings.tsv
//   synth  -> interactions.tsv, sim_go.tsv, sim_ppi.tsv, truth.tsv, entities.txt

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lmfrank/config.hpp"

namespace lmfrank {

// Loaded data plus the regularizers a run actually uses. A similarity source
// that is absent forces its coefficient to 0; a zero coefficient skips the
// Laplacian altogether.
struct PreparedRun {
    Dataset data;
    Hyperparameters hyper;
    std::optional<KnnAdjacency> go_adjacency;
    std::optional<KnnAdjacency> ppi_adjacency;
    std::optional<GraphLaplacian> go;
    std::optional<GraphLaplacian> ppi;

    const GraphLaplacian* go_ptr() const { return go ? &*go : nullptr; }
    const GraphLaplacian* ppi_ptr() const { return ppi ? &*ppi : nullptr; }
};

PreparedRun prepare_run(const RunConfig& config);

FactorModel cmd_train(const RunConfig& config, std::ostream& log);
MetricReport cmd_cv(const RunConfig& config, std::ostream& log);
std::vector<RankedPair> cmd_rank(const RunConfig& config, std::ostream& log);
SyntheticFiles cmd_synth(const RunConfig& config, std::ostream& log);
void cmd_inspect(const RunConfig& config, std::ostream& out);

void write_metric_report(const std::filesystem::path& dir, const MetricReport& report,
                         const RunConfig& config);

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Full command line (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lmfrank
