#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gel/io.hpp"

namespace gel {

// Flat experiment configuration. Serialized as diffable key=value text with
// dotted sections; a JSON document with the same keys is also accepted.
struct ExperimentConfig {
  Index d = 200;
  Index n = 600;
  std::vector<Index> p_grid = {100, 200, 400, 800};
  std::string activation = "tanh";
  std::string loss = "logistic";
  double lambda = 0.1;
  std::string teacher = "sign";
  std::string output = "sign";
  std::uint64_t master_seed = 1;
  int n_trials = 20;
  Index mc_fresh_samples = 100000;
  double tilt_step = 0.02;
  double solver_tol = -1.0;  // < 0: solver default
  int solver_max_iter = 200;
  double solver_line_search_beta = 0.5;
  double solver_line_search_c = 1e-4;
  Index path_cap = 200;
  Index path_stride = 1;
  Index diag_n_mc = 0;  // 0: use 10 p

  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw std::invalid_argument("config field '" + field + "': " + why);
    };
    if (d < 1) fail("d", "must be >= 1");
    if (n < 1) fail("n", "must be >= 1");
    if (p_grid.empty()) fail("p_grid", "must be nonempty");
    for (Index p : p_grid)
      if (p < 1) fail("p_grid", "entries must be >= 1");
    if (!std::is_sorted(p_grid.begin(), p_grid.end()))
      fail("p_grid", "must be sorted ascending");
    if (!(lambda > 0.0)) fail("lambda", "must be > 0");
    if (n_trials < 1) fail("n_trials", "must be >= 1");
    if (mc_fresh_samples < 1000) fail("mc.fresh_samples", "must be >= 1000");
    if (!(tilt_step > 0.0)) fail("tilt.step", "must be > 0");
    if (solver_max_iter < 1) fail("solver.max_iter", "must be >= 1");
    if (!(solver_line_search_beta > 0.0 && solver_line_search_beta < 1.0))
      fail("solver.line_search_beta", "must be in (0, 1)");
    if (path_cap < 1) fail("path.cap", "must be >= 1");
    if (path_stride < 1) fail("path.stride", "must be >= 1");
  }

  std::map<std::string, std::string> to_map() const {
    std::map<std::string, std::string> m;
    m["d"] = std::to_string(d);
    m["n"] = std::to_string(n);
    std::string grid;
    for (std::size_t i = 0; i < p_grid.size(); ++i) {
      if (i) grid += ',';
      grid += std::to_string(p_grid[i]);
    }
    m["p_grid"] = grid;
    m["activation"] = activation;
    m["loss"] = loss;
    m["lambda"] = format_float(lambda);
    m["teacher"] = teacher;
    m["output"] = output;
    m["master_seed"] = std::to_string(master_seed);
    m["n_trials"] = std::to_string(n_trials);
    m["mc.fresh_samples"] = std::to_string(mc_fresh_samples);
    m["tilt.step"] = format_float(tilt_step);
    m["solver.tol"] = format_float(solver_tol);
    m["solver.max_iter"] = std::to_string(solver_max_iter);
    m["solver.line_search_beta"] = format_float(solver_line_search_beta);
    m["solver.line_search_c"] = format_float(solver_line_search_c);
    m["path.cap"] = std::to_string(path_cap);
    m["path.stride"] = std::to_string(path_stride);
    m["diag.n_mc"] = std::to_string(diag_n_mc);
    return m;
  }

  std::string serialize() const {
    std::ostringstream out;
    for (const auto& [k, v] : to_map()) out << k << "=" << v << "\n";
    return out.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    for (const auto& [k, v] : to_map()) j[k] = v;
    return j;
  }

  static ExperimentConfig from_map(const std::map<std::string, std::string>& m) {
    ExperimentConfig c;
    auto get = [&](const char* key) -> const std::string* {
      auto it = m.find(key);
      return it == m.end() ? nullptr : &it->second;
    };
    try {
      if (auto* v = get("d")) c.d = std::stoll(*v);
      if (auto* v = get("n")) c.n = std::stoll(*v);
      if (auto* v = get("p_grid")) {
        c.p_grid.clear();
        std::stringstream ss(*v);
        std::string tok;
        while (std::getline(ss, tok, ',')) c.p_grid.push_back(std::stoll(tok));
      }
      if (auto* v = get("activation")) c.activation = *v;
      if (auto* v = get("loss")) c.loss = *v;
      if (auto* v = get("lambda")) c.lambda = std::stod(*v);
      if (auto* v = get("teacher")) c.teacher = *v;
      if (auto* v = get("output")) c.output = *v;
      if (auto* v = get("master_seed")) c.master_seed = std::stoull(*v);
      if (auto* v = get("n_trials")) c.n_trials = std::stoi(*v);
      if (auto* v = get("mc.fresh_samples")) c.mc_fresh_samples = std::stoll(*v);
      if (auto* v = get("tilt.step")) c.tilt_step = std::stod(*v);
      if (auto* v = get("solver.tol")) c.solver_tol = std::stod(*v);
      if (auto* v = get("solver.max_iter")) c.solver_max_iter = std::stoi(*v);
      if (auto* v = get("solver.line_search_beta"))
        c.solver_line_search_beta = std::stod(*v);
      if (auto* v = get("solver.line_search_c"))
        c.solver_line_search_c = std::stod(*v);
      if (auto* v = get("path.cap")) c.path_cap = std::stoll(*v);
      if (auto* v = get("path.stride")) c.path_stride = std::stoll(*v);
      if (auto* v = get("diag.n_mc")) c.diag_n_mc = std::stoll(*v);
    } catch (const std::exception& e) {
      throw std::invalid_argument(std::string("config parse: ") + e.what());
    }
    return c;
  }

  static ExperimentConfig parse(const std::string& text) {
    std::map<std::string, std::string> m;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
      const nlohmann::json j = nlohmann::json::parse(text);
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (it->is_string())
          m[it.key()] = it->get<std::string>();
        else
          m[it.key()] = it->dump();
      }
    } else {
      std::stringstream ss(text);
      std::string line;
      while (std::getline(ss, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
          const auto b = s.find_first_not_of(" \t\r");
          const auto e = s.find_last_not_of(" \t\r");
          return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        m[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
      }
    }
    return from_map(m);
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    ExperimentConfig c = parse(ss.str());
    c.validate();
    return c;
  }
};

}  // namespace gel
