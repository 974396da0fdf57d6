#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "config.hpp"

namespace bwler::cli {

struct GlobalOptions {
    std::filesystem::path out = "out";
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::optional<std::size_t> max_steps;
    bool quiet = false;
};

// Each command validates its sections and keys before doing any work and
// writes report.json (plus CSVs and, for training commands, model.ckpt)
// into opts.out. Config problems raise ConfigError.
void run_solve(Config cfg, const GlobalOptions& opts);
void run_interp(Config cfg, const GlobalOptions& opts);
void run_probe(Config cfg, const GlobalOptions& opts);
void run_decompose(Config cfg, const GlobalOptions& opts);
void list_problems(std::ostream& out);

}  // namespace bwler::cli
