// neurovm: benchmark and scenario runner for the virtualized neuromorphic
// fabric simulator.

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "neurovm/bench.hpp"
#include "neurovm/errors.hpp"
#include "neurovm/scenario.hpp"
#include "neurovm/simulation.hpp"

namespace {

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string scenario;
  std::string trace;
  unsigned jobs = 1;
};

/// Opens `path`, or falls back to stdout when empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw neurovm::ExportIoFailure("cannot open " + path + " for writing");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close(const std::string& path) {
    stream().flush();
    if (!stream()) throw neurovm::ExportIoFailure("failed writing " + (path.empty() ? "stdout" : path));
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

/// Parses "a,b,c" into byte counts; an empty string is an empty list.
std::vector<std::uint64_t> parse_sizes(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const std::string& item : CLI::detail::split(text, ',')) {
    const std::string t = CLI::detail::trim_copy(item);
    if (t.empty()) continue;
    std::uint64_t v = 0;
    auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || end != t.data() + t.size()) {
      throw neurovm::ConfigError("--sizes: '" + t + "' is not a byte count");
    }
    out.push_back(v);
  }
  return out;
}

neurovm::Scenario base_scenario(const GlobalFlags& g) {
  neurovm::Scenario s =
      g.scenario.empty() ? neurovm::Scenario::defaults() : neurovm::load_scenario(g.scenario);
  if (g.seed) s.seed = *g.seed;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event simulator of a virtualized neuromorphic FPGA fabric"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--seed", g.seed, "Seed overriding the scenario's");
  app.add_option("--out", g.out, "Output CSV path (default: stdout)");
  app.add_option("--scenario", g.scenario, "Scenario file (JSON)");
  app.add_option("--trace", g.trace, "Write the event trace (tick,seq,kind,detail) here");
  app.add_option("--jobs", g.jobs, "Worker threads for benchmark cells")->check(CLI::Range(1u, 256u));

  std::vector<std::uint32_t> vm_counts = neurovm::bench::default_vm_counts();
  std::vector<std::uint64_t> sizes = neurovm::bench::default_sizes();
  std::uint32_t rounds = 4;
  auto* thr = app.add_subcommand("bench-throughput", "Aggregate throughput vs transfer size");
  thr->add_option("--vm-counts", vm_counts, "VM counts")->delimiter(',');
  std::string sizes_arg;
  thr->add_option("--sizes", sizes_arg,
                  "Comma-separated transfer sizes in bytes; \"\" gives a header-only CSV");
  thr->add_option("--rounds", rounds, "Back-to-back transfers per VM")->check(CLI::PositiveNumber);

  std::uint32_t max_accel = 20;
  auto* energy = app.add_subcommand("bench-energy", "Energy per workload unit vs accelerator count");
  energy->add_option("--max-accelerators", max_accel, "Upper end of the range 1..N")
      ->check(CLI::PositiveNumber);

  std::vector<std::uint32_t> reconfig_counts;
  for (std::uint32_t n = 1; n <= 16; ++n) reconfig_counts.push_back(n);
  std::uint32_t swaps = 3;
  auto* reconf = app.add_subcommand("bench-reconfig", "Full vs partial reconfiguration time");
  reconf->add_option("--vm-counts", reconfig_counts, "VM counts")->delimiter(',');
  reconf->add_option("--swaps", swaps, "Module swaps per VM")->check(CLI::PositiveNumber);

  auto* run = app.add_subcommand("run", "Run a scenario and emit metric samples");
  auto* print = app.add_subcommand("print-scenario", "Print the default scenario as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    std::unique_ptr<std::ofstream> trace_file;
    if (!g.trace.empty()) {
      trace_file = std::make_unique<std::ofstream>(g.trace, std::ios::binary);
      if (!*trace_file) throw neurovm::ExportIoFailure("cannot open " + g.trace + " for writing");
    }
    neurovm::bench::Options opts{g.jobs, trace_file.get()};
    const neurovm::Scenario base = base_scenario(g);
    Output out(g.out);

    if (*thr) {
      if (thr->count("--sizes") > 0) sizes = parse_sizes(sizes_arg);
      const auto rows = neurovm::bench::bench_throughput(base, vm_counts, sizes, opts, rounds);
      neurovm::bench::write_throughput_csv(out.stream(), rows);
    } else if (*energy) {
      const auto rows = neurovm::bench::bench_energy(base, max_accel, opts);
      neurovm::bench::write_energy_csv(out.stream(), rows);
    } else if (*reconf) {
      const auto rows = neurovm::bench::bench_reconfig(base, reconfig_counts, opts, swaps);
      neurovm::bench::write_reconfig_csv(out.stream(), rows);
    } else if (*run) {
      const auto summary = neurovm::run_scenario(base, out.stream(), trace_file.get());
      std::cerr << "events=" << summary.events << " tasks=" << summary.tasks_completed
                << " deadline_misses=" << summary.deadline_misses
                << " migrations=" << summary.migrations
                << " transfers=" << summary.transfers_completed
                << " synaptic_ops=" << summary.synaptic_ops
                << " reconfig_full_ns=" << summary.reconfig_full.count()
                << " reconfig_partial_ns=" << summary.reconfig_partial.count() << '\n';
    } else if (*print) {
      out.stream() << neurovm::scenario_to_json(base);
    }
    out.close(g.out);
    if (trace_file) {
      trace_file->flush();
      if (!*trace_file) throw neurovm::ExportIoFailure("failed writing " + g.trace);
    }
  } catch (const neurovm::ParseError& e) {
    std::cerr << g.scenario << ':' << e.line() << ':' << e.column() << ": parse error: " << e.what()
              << '\n';
    return 2;
  } catch (const neurovm::ValidationError& e) {
    std::cerr << g.scenario << ": invalid field '" << e.field() << "': " << e.what() << '\n';
    return 2;
  } catch (const neurovm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const neurovm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
