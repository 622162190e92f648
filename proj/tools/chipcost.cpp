// chipcost: evaluate a chiplet system or run a parameter sweep.
//
//   chipcost eval  --system chips.xml [--netlist nets.xml] --library lib/ [--out f] [--format json|csv]
//   chipcost sweep --sweep sweep.json --system chips.xml [--netlist nets.xml] --library lib/
//                  [--out f.csv] [--jobs N]
//
// Exit codes: 0 ok, 1 usage or I/O failure, 2 invalid input, 3 infeasible design.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "chipcost/config_io.hpp"
#include "chipcost/cost_engine.hpp"
#include "chipcost/errors.hpp"
#include "chipcost/report.hpp"
#include "chipcost/sweep.hpp"

namespace fs = std::filesystem;
using namespace chipcost;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitInfeasible = 3;

struct Inputs {
  std::string system;
  std::string netlist;
  std::string library;
  std::string out = "-";
};

void AddInputFlags(CLI::App& cmd, Inputs& in) {
  cmd.add_option("--system", in.system, "chip definition XML")->required()->check(CLI::ExistingFile);
  cmd.add_option("--netlist", in.netlist, "netlist XML")->check(CLI::ExistingFile);
  cmd.add_option("--library", in.library, "library XML file or directory of XML files")
      ->required()
      ->check(CLI::ExistingPath);
  cmd.add_option("--out", in.out, "output file, - for stdout");
}

ProcessLibrary LoadLibrary(const fs::path& path) {
  if (fs::is_directory(path)) return ParseLibrary(path);
  return ParseLibraryXml(ReadTextFile(path), path.string());
}

SystemSpec LoadSystem(const Inputs& in) {
  const std::string chips = ReadTextFile(in.system);
  if (in.netlist.empty()) return ParseSystemXml(chips, in.system);
  const std::string nets = ReadTextFile(in.netlist);
  return ParseSystemXml(chips, in.system, nets, in.netlist);
}

bool WriteOutput(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return static_cast<bool>(std::cout.flush());
  }
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) {
    std::cerr << "chipcost: cannot write " << path << "\n";
    return false;
  }
  return true;
}

int RunEval(const Inputs& in, const std::string& format) {
  auto library = std::make_shared<const ProcessLibrary>(LoadLibrary(in.library));
  ValidateLibrary(*library);
  const ValidatedSystem system = ValidatedSystem::Validate(LoadSystem(in), library);
  const CostReport report = Evaluate(system);
  const std::string text = format == "csv" ? ReportToCsv(report) : ReportToJson(report);
  if (!WriteOutput(in.out, text)) return kExitIo;
  if (!report.feasible) {
    std::cerr << "chipcost: infeasible: " << report.diagnostic << "\n";
    return kExitInfeasible;
  }
  return kExitOk;
}

int RunSweepCommand(const Inputs& in, const std::string& sweep_path, int jobs) {
  const SweepSpec spec = ParseSweepSpec(ReadTextFile(sweep_path), sweep_path);
  const ProcessLibrary library = LoadLibrary(in.library);
  ValidateLibrary(library);
  const SystemSpec system = LoadSystem(in);
  CheckSweep(spec, system, library);
  GeometryCache cache;
  const auto rows = RunSweep(spec, system, library, {jobs, &cache});
  if (!WriteOutput(in.out, SweepToCsv(spec, rows))) return kExitIo;
  std::size_t infeasible = 0;
  for (const auto& r : rows) infeasible += !r.feasible;
  if (infeasible > 0)
    std::cerr << "chipcost: " << infeasible << " of " << rows.size() << " points infeasible\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chiplet cost model: area, power, yield, recurring and NRE cost"};
  app.require_subcommand(1);

  Inputs eval_in;
  std::string format = "json";
  auto* eval = app.add_subcommand("eval", "evaluate one system");
  AddInputFlags(*eval, eval_in);
  eval->add_option("--format", format, "report format")->check(CLI::IsMember({"json", "csv"}));

  Inputs sweep_in;
  std::string sweep_path;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "evaluate every point of a parameter sweep");
  sweep->add_option("--sweep", sweep_path, "sweep description JSON")
      ->required()
      ->check(CLI::ExistingFile);
  AddInputFlags(*sweep, sweep_in);
  sweep->add_option("--jobs", jobs, "parallel evaluations")->check(CLI::Range(1, 1024));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitIo;
  }

  try {
    if (*eval) return RunEval(eval_in, format);
    return RunSweepCommand(sweep_in, sweep_path, jobs);
  } catch (const ParseError& e) {
    std::cerr << "chipcost: parse error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ValidationError& e) {
    std::cerr << "chipcost: invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ConflictError& e) {
    std::cerr << "chipcost: conflict: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ConfigError& e) {
    std::cerr << "chipcost: inconsistent configuration: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "chipcost: " << e.what() << "\n";
    return kExitIo;
  }
}
