// Command-line driver: oracle simulation, trace comparison, sorter and
// cuckoo statistics. Every command is deterministic given --seed.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "horam/harness.hpp"

using namespace horam;

namespace {

constexpr int kMismatch = 1;
constexpr int kUsage = 2;

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw ParameterError("cannot open " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

Workload load_workload(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open workload " + path);
  return parse_workload(in);
}

// File path, or one of repeat:<addr>, sweep, random.
Workload workload_spec(const std::string& spec, std::uint64_t n, std::uint64_t ops, std::uint64_t seed) {
  if (spec == "sweep") return sweep_workload(n, ops);
  if (spec == "random") return random_workload(n, ops, seed);
  if (spec.rfind("repeat:", 0) == 0) return repeated_workload(std::stoull(spec.substr(7)), ops);
  return load_workload(spec);
}

struct Common {
  std::uint64_t n = 1024;
  std::string mode = "const";
  std::uint64_t ops = 4096;
  std::uint64_t seed = 1;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--n", c.n, "number of cells (power of two)")->capture_default_str();
  cmd->add_option("--mode", c.mode, "const or sublinear:<r>")->capture_default_str();
  cmd->add_option("--ops", c.ops, "number of logical operations")->capture_default_str();
  cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
  cmd->add_option("--out", c.out, "write the report here instead of stdout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical ORAM simulator and benchmarks"};
  app.require_subcommand(1);

  Common sim;
  std::string workload;
  auto* simulate_cmd = app.add_subcommand("simulate", "run the ORAM next to a plain array and compare every read");
  add_common(simulate_cmd, sim);
  simulate_cmd->add_option("--workload", workload, "workload file of R <addr> / W <addr> <value> lines");

  Common cmp;
  cmp.ops = 4096;
  std::string spec_a = "repeat:0", spec_b = "sweep";
  std::size_t runs = 1;
  auto* compare_cmd = app.add_subcommand("trace-compare", "diff the structural traces of two workloads");
  add_common(compare_cmd, cmp);
  compare_cmd->add_option("--a", spec_a, "first workload: file, repeat:<addr>, sweep or random")->capture_default_str();
  compare_cmd->add_option("--b", spec_b, "second workload")->capture_default_str();
  compare_cmd->add_option("--runs", runs, "repeat with seeds seed..seed+runs-1")->capture_default_str();

  std::vector<std::size_t> sort_n{65536};
  std::size_t sort_m = 3 * 65536 + 64, sort_b = 16, sort_trials = 20;
  std::uint64_t sort_seed = 1;
  std::string sort_out;
  auto* sort_cmd = app.add_subcommand("sort-bench", "I/O counts and trace equality of the external sort");
  sort_cmd->add_option("--N", sort_n, "input sizes; several values add a fit line")->capture_default_str();
  sort_cmd->add_option("--M", sort_m, "private memory in records")->capture_default_str();
  sort_cmd->add_option("--B", sort_b, "block size in records")->capture_default_str();
  sort_cmd->add_option("--trials", sort_trials, "random permutations per size")->capture_default_str();
  sort_cmd->add_option("--seed", sort_seed, "random seed")->capture_default_str();
  sort_cmd->add_option("--out", sort_out, "write the report here instead of stdout");

  std::size_t ck_n = 4096, ck_trials = 1000, ck_stash = 0;
  double ck_load = 1.0 / 3.0;
  std::uint64_t ck_seed = 1;
  std::string ck_out;
  auto* cuckoo_cmd = app.add_subcommand("cuckoo-stats", "component sizes and stash use of cuckoo hashing");
  cuckoo_cmd->add_option("--n", ck_n, "keys per table")->capture_default_str();
  cuckoo_cmd->add_option("--load", ck_load, "keys / total cells, below 1/2")->capture_default_str();
  cuckoo_cmd->add_option("--trials", ck_trials, "independent tables")->capture_default_str();
  cuckoo_cmd->add_option("--stash", ck_stash, "stash capacity, default ceil(2 log2 n)");
  cuckoo_cmd->add_option("--seed", ck_seed, "random seed")->capture_default_str();
  cuckoo_cmd->add_option("--out", ck_out, "write the report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate_cmd) {
      const auto cfg = make_config(sim.n, parse_mode(sim.mode));
      const auto w = workload.empty() ? random_workload(sim.n, sim.ops, sim.seed) : load_workload(workload);
      const auto rep = simulate(cfg, w, sim.seed);
      Output out(sim.out);
      write_report(out.stream(), rep.lines());
      if (rep.first_mismatch) {
        std::cerr << "mismatch at op " << *rep.first_mismatch << '\n';
        return kMismatch;
      }
      return rep.passed() ? 0 : kMismatch;
    }
    if (*compare_cmd) {
      const auto cfg = make_config(cmp.n, parse_mode(cmp.mode));
      if (runs == 0) throw ParameterError("--runs must be positive");
      Output out(cmp.out);
      bool equal = true;
      UniformityReport all;
      for (std::size_t r = 0; r < runs; ++r) {
        const std::uint64_t seed = cmp.seed + r;
        const auto a = workload_spec(spec_a, cmp.n, cmp.ops, seed);
        const auto b = workload_spec(spec_b, cmp.n, cmp.ops, seed ^ 0x9e3779b97f4a7c15ULL);
        const auto c = compare_traces(cfg, a, b, seed);
        out.stream() << ReportLine("run").field("seed", seed).str() << '\n';
        write_report(out.stream(), c.lines());
        equal = equal && c.equal;
        all.merge(c.uniformity);
      }
      if (runs > 1)
        out.stream() << ReportLine("uniformity_total").field("tested", all.tests.size()).field("passed", all.passed())
                            .field("pass_rate", all.pass_rate()).str()
                     << '\n';
      return equal ? 0 : kMismatch;
    }
    if (*sort_cmd) {
      Output out(sort_out);
      std::vector<double> ios, model;
      bool ok = true;
      for (auto N : sort_n) {
        const auto sb = sort_bench(N, sort_m, sort_b, sort_trials, sort_seed);
        write_report(out.stream(), sb.lines());
        ios.push_back(static_cast<double>(sb.ios()));
        model.push_back(sb.model());
        ok = ok && sb.traces_equal && sb.sorted;
      }
      if (sort_n.size() > 1) {
        const double c = fit_constant(ios, model);
        double worst = 1.0;
        for (std::size_t i = 0; i < ios.size(); ++i) {
          const double ratio = ios[i] / (c * model[i]);
          worst = std::max({worst, ratio, 1.0 / ratio});
        }
        out.stream() << ReportLine("fit").field("c", c).field("max_deviation", worst).str() << '\n';
      }
      return ok ? 0 : kMismatch;
    }
    if (*cuckoo_cmd) {
      Output out(ck_out);
      const auto cs = cuckoo_stats(ck_n, ck_load, ck_trials, ck_seed, ck_stash);
      write_report(out.stream(), cs.lines());
      return 0;
    }
  } catch (const ParameterError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const KeyOutOfRange& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  }
  return 0;
}
