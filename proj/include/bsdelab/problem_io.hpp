#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "bsdelab/problem.hpp"

namespace bsdelab {

// Problem documents: {d, T, x0, b, sigma, f, g, params, regime} with
// coefficient strings in the expression grammar. b is a list of d strings
// (or one string when d = 1); sigma is a d x d list of lists (or one string
// when d = 1). See docs/formats.md.
ProblemSpec problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const ProblemSpec& spec);

ProblemSpec load_problem(const std::filesystem::path& path);
void save_problem(const ProblemSpec& spec, const std::filesystem::path& path);

} // namespace bsdelab
