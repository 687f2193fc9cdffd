// Command-line front end: denotational enumeration, operational exploration,
// adequacy and property checks, seeded simulation, and trace replay.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "choreo/global.hpp"
#include "choreo/protocols.hpp"

using namespace choreo;
using nlohmann::json;

namespace {

// Exit codes: 0 holds/exhaustive, 1 violation, 2 inconclusive, 3 usage error.
constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kInconclusive = 2;
constexpr int kUsage = 3;

struct CommonArgs {
  std::string protocol;
  uint32_t n = 4, f = 1;
  uint32_t b = std::numeric_limits<uint32_t>::max();  // default: b = f
  uint32_t iterations = 0;
  uint32_t vsize = 2;
  uint32_t k = 2;
  bool p = true;
  std::string inputs;  // comma-separated booleans
  uint64_t seed = 0;
  bool seed_given = false;
  uint64_t max_states = 4'000'000;
  uint32_t max_depth = 100'000;
  double timeout = 600.0;
  uint32_t jobs = 1;
  bool materialize_lists = false;
  bool byz_after_receive = false;
  bool asymmetric = false;
  std::string config_file;
};

std::vector<bool> parse_bools(const std::string& csv) {
  std::vector<bool> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "T" || tok == "t" || tok == "true" || tok == "1")
      out.push_back(true);
    else if (tok == "F" || tok == "f" || tok == "false" || tok == "0")
      out.push_back(false);
    else
      throw Error("cannot parse boolean token: " + tok);
  }
  return out;
}

// Flags win over the optional JSON config file, which wins over defaults.
void merge_config_file(CommonArgs& args, const CLI::App& app) {
  if (args.config_file.empty()) return;
  std::ifstream in(args.config_file);
  if (!in) throw Error("cannot open config file " + args.config_file);
  json j = json::parse(in);
  auto take = [&](const char* key, auto& slot, const char* flag) {
    if (j.contains(key) && app.count(flag) == 0)
      slot = j.at(key).get<std::decay_t<decltype(slot)>>();
  };
  take("protocol", args.protocol, "--protocol");
  take("n", args.n, "--n");
  take("f", args.f, "--f");
  take("b", args.b, "--b");
  take("iterations", args.iterations, "--iterations");
  take("vsize", args.vsize, "--vsize");
  take("k", args.k, "--k");
  take("p", args.p, "--p");
  take("seed", args.seed, "--seed");
  if (j.contains("inputs") && app.count("--inputs") == 0) {
    std::string csv;
    for (const auto& v : j.at("inputs")) csv += (csv.empty() ? "" : ",") +
                                                std::string(v.get<bool>() ? "T" : "F");
    args.inputs = csv;
  }
}

json make_spec(const CommonArgs& args) {
  if (args.protocol.empty()) throw Error("--protocol is required");
  const uint32_t b = args.b == std::numeric_limits<uint32_t>::max()
                         ? (args.protocol == "seqpaxos" ? 0 : args.f)
                         : args.b;
  json spec{{"protocol", args.protocol}, {"n", args.n}, {"f", args.f}};
  if (args.protocol == "simplevote") {
    spec["b"] = b;
    spec["p"] = args.p;
    std::vector<bool> xs = args.inputs.empty()
                               ? std::vector<bool>(args.n - b, args.p)
                               : parse_bools(args.inputs);
    spec["x"] = xs;
  } else if (args.protocol == "bosco") {
    spec["b"] = b;
    spec["iterations"] = args.iterations;
    spec["asymmetric"] = args.asymmetric;
    std::vector<bool> xs = args.inputs.empty()
                               ? std::vector<bool>(args.n - b, true)
                               : parse_bools(args.inputs);
    spec["inputs"] = xs;
  } else if (args.protocol == "seqpaxos") {
    spec["vsize"] = args.vsize;
    spec["iterations"] = args.iterations;
  } else {
    throw Error("unknown protocol: " + args.protocol);
  }
  return spec;
}

global::Options run_options(const CommonArgs& args) {
  global::Options opts;
  opts.byz_after_receive = args.byz_after_receive;
  opts.materialize_lists = args.materialize_lists;
  return opts;
}

global::Budget run_budget(const CommonArgs& args) {
  global::Budget budget;
  budget.max_states = args.max_states;
  budget.max_depth = args.max_depth;
  budget.seconds = args.timeout;
  return budget;
}

json channel_state_json(const channel::ChannelState& cs) {
  json j;
  j["sent"] = cs.sent;
  j["received"] = cs.received;
  json inbox = json::object();
  for (const auto& [r, msgs] : cs.inbox) {
    json arr = json::array();
    for (const auto& v : msgs) arr.push_back(v.to_json());
    inbox[std::to_string(r)] = arr;
  }
  j["inbox"] = inbox;
  return j;
}

json delta_json(const global::System& sys) {
  json arr = json::array();
  for (const auto& e : sys.delta())
    arr.push_back({{"chan", e.id.str()},
                   {"sender", e.sender.name},
                   {"receiver", e.receiver.name},
                   {"msg_type", e.msg_type.to_json()}});
  return arr;
}

std::string hash_hex(uint64_t h) {
  std::ostringstream os;
  os << "0x" << std::hex << h;
  return os.str();
}

int cmd_enumerate(const CommonArgs& args) {
  const auto built = protocols::build_from_spec(make_spec(args));
  denote::Options dopts;
  dopts.materialize_lists = args.materialize_lists;
  const denote::OutputSet out =
      denote::denote_prog(built.config, {}, built.program, dopts);
  json j{{"command", "enumerate"},
         {"spec", built.spec},
         {"count", out.size()},
         {"outputs", denote::output_set_to_json(out)},
         {"exhaustive", true}};
  std::cout << j.dump() << "\n";
  return kOk;
}

void write_trace_file(const std::string& path, const global::System& sys,
                      const json& spec, uint64_t seed,
                      std::span<const global::GlobalLabel> labels,
                      bool dump_channels) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace file " + path);
  json header{{"choreo_trace", 1},
              {"spec", spec},
              {"config", sys.config().to_json()},
              {"delta", delta_json(sys)},
              {"program_hash", hash_hex(hll::program_hash(*sys.program()))},
              {"byz_after_receive", sys.options().byz_after_receive},
              {"seed", seed}};
  out << header.dump() << "\n";
  global::GlobalState s = sys.initial();
  for (const auto& l : labels) {
    json line = sys.label_to_json(l);
    if (dump_channels) {
      auto next = sys.step(s, l);
      if (!next) throw Error("trace label failed during dump");
      s = std::move(*next);
      json chans = json::object();
      for (const auto& [cid, cs] : s.channels)
        chans[cid.str()] = channel_state_json(cs);
      line["channels"] = chans;
    }
    out << line.dump() << "\n";
  }
}

int cmd_simulate(const CommonArgs& args, const std::string& trace_path,
                 bool do_align, bool dump_channels) {
  const auto built = protocols::build_from_spec(make_spec(args));
  const global::System sys(built.program, built.config, run_options(args));
  std::vector<global::GlobalLabel> labels = sys.simulate(args.seed);

  const auto direct = sys.replay(labels);
  if (!direct.ok) throw Error("internal: simulated trace does not replay");
  const auto output = sys.extract_output(*direct.final_state);

  json j{{"command", "simulate"},
         {"spec", built.spec},
         {"seed", args.seed},
         {"labels", labels.size()},
         {"completed", true},
         {"output", denote::record_to_json(output)},
         {"trace", trace_path}};

  if (do_align) {
    const auto aligned = global::align(sys.delta(), labels);
    const auto re = sys.replay(aligned);
    if (!re.ok || !(*re.final_state == *direct.final_state))
      throw Error("alignment failed to replay to the same state");
    j["aligned"] = true;
    labels = aligned;
  }
  write_trace_file(trace_path, sys, built.spec, args.seed, labels, dump_channels);
  std::cout << j.dump() << "\n";
  return kOk;
}

int cmd_replay(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error("empty trace file");
  const json header = json::parse(line);
  if (header.value("choreo_trace", 0) != 1)
    throw Error("not a choreo trace file");

  const auto built = protocols::build_from_spec(header.at("spec"));
  global::Options opts;
  opts.byz_after_receive = header.value("byz_after_receive", false);
  const global::System sys(built.program, built.config, opts);
  const std::string want_hash = hash_hex(hll::program_hash(*sys.program()));
  if (header.at("program_hash").get<std::string>() != want_hash)
    throw Error("trace header hash does not match the reconstructed program");

  std::vector<global::GlobalLabel> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    labels.push_back(sys.label_from_json(json::parse(line)));
  }
  const auto rr = sys.replay(labels);
  json j{{"command", "replay"},
         {"trace", path},
         {"permissible", rr.ok},
         {"labels", labels.size()}};
  if (!rr.ok) {
    j["failed_index"] = rr.failed_index;
    std::cout << j.dump() << "\n";
    return kViolation;
  }
  const bool completed = sys.completed(*rr.final_state);
  j["completed"] = completed;
  if (completed)
    j["output"] = denote::record_to_json(sys.extract_output(*rr.final_state));
  std::cout << j.dump() << "\n";
  return kOk;
}

int finish_check(const protocols::CheckReport& rep) {
  std::cout << rep.to_json().dump() << "\n";
  if (!rep.exhaustive) return kInconclusive;
  return rep.holds ? kOk : kViolation;
}

int cmd_check(const CommonArgs& args, const std::string& check_name) {
  const uint32_t b =
      args.b == std::numeric_limits<uint32_t>::max() ? args.f : args.b;
  if (check_name == "one-step")
    return finish_check(protocols::check_one_step(args.n, args.f, b));
  if (check_name == "bosco-agreement")
    return finish_check(protocols::check_agreement_bosco(
        args.n, args.f, b, args.k, args.asymmetric, args.jobs));
  if (check_name == "seqpaxos-agreement")
    return finish_check(
        protocols::check_agreement_seqpaxos(args.n, args.f, args.vsize, args.k));
  if (check_name == "counting-lemma")
    return finish_check(protocols::check_counting_lemma(args.n, args.f, b));
  if (check_name == "adequacy") {
    const auto built = protocols::build_from_spec(make_spec(args));
    const global::AdequacyReport rep = global::check_adequacy(
        built.program, built.config, run_budget(args), run_options(args));
    json j{{"command", "check"},
           {"check", "adequacy"},
           {"spec", built.spec},
           {"subset", rep.subset},
           {"equal", rep.equal},
           {"exhaustive", rep.exhaustive},
           {"operational_count", rep.operational.size()},
           {"denotational_count", rep.denotational.size()}};
    if (rep.counterexample) {
      const std::string path = "adequacy-counterexample.trace";
      const global::System sys(built.program, built.config, run_options(args));
      write_trace_file(path, sys, built.spec, args.seed, *rep.counterexample,
                       false);
      j["counterexample"] = path;
      std::cerr << "counterexample trace written to " << path << "\n";
      std::cout << j.dump() << "\n";
      return kViolation;
    }
    std::cout << j.dump() << "\n";
    return rep.exhaustive ? kOk : kInconclusive;
  }
  throw CLI::ValidationError("unknown check: " + check_name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"choreo: twin-language consensus protocol checker"};
  app.require_subcommand(1);

  CommonArgs args;
  if (const char* env_seed = std::getenv("CHOREO_SEED"))
    args.seed = std::strtoull(env_seed, nullptr, 10);

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--protocol", args.protocol,
                    "simplevote | bosco | seqpaxos");
    cmd->add_option("--n", args.n, "replica count");
    cmd->add_option("--f", args.f, "fault bound");
    cmd->add_option("--b", args.b, "byzantine count (default: f)");
    cmd->add_option("--iterations", args.iterations, "loop unrollings");
    cmd->add_option("--vsize", args.vsize, "seqpaxos value domain size");
    cmd->add_option("--k", args.k, "agreement check depth");
    cmd->add_option("--p", args.p, "simplevote leader input");
    cmd->add_option("--inputs", args.inputs, "comma-separated inputs, e.g. T,T,F");
    cmd->add_option("--seed", args.seed, "random seed (or CHOREO_SEED)");
    cmd->add_option("--max-states", args.max_states, "exploration state budget");
    cmd->add_option("--max-depth", args.max_depth, "exploration depth budget");
    cmd->add_option("--timeout", args.timeout, "exploration seconds budget");
    cmd->add_option("--jobs", args.jobs, "worker cap for property suites");
    cmd->add_flag("--materialize-lists", args.materialize_lists,
                  "literal netwk list enumeration (oracle path)");
    cmd->add_flag("--byz-after-receive", args.byz_after_receive,
                  "generate byzantine sends toward finished receivers");
    cmd->add_flag("--asymmetric", args.asymmetric,
                  "bosco >= decision threshold for newv = true");
    cmd->add_option("--config", args.config_file, "JSON config file (flags win)");
  };

  CLI::App* enumerate = app.add_subcommand("enumerate", "denotational output set");
  add_common(enumerate);

  CLI::App* check = app.add_subcommand("check", "run a named check");
  std::string check_name;
  check->add_option("name", check_name,
                    "one-step | bosco-agreement | seqpaxos-agreement | "
                    "counting-lemma | adequacy")
      ->required();
  add_common(check);

  CLI::App* simulate = app.add_subcommand("simulate", "one random maximal trace");
  std::string trace_path = "choreo.trace";
  bool do_align = false, dump_channels = false;
  simulate->add_option("--trace", trace_path, "trace output file");
  simulate->add_flag("--align", do_align, "align the trace before writing");
  simulate->add_flag("--dump-channels", dump_channels,
                     "include channel states in the trace");
  add_common(simulate);

  CLI::App* replay = app.add_subcommand("replay", "replay a trace file");
  std::string replay_path;
  replay->add_option("file", replay_path, "trace file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (enumerate->parsed()) {
      merge_config_file(args, *enumerate);
      return cmd_enumerate(args);
    }
    if (check->parsed()) {
      merge_config_file(args, *check);
      return cmd_check(args, check_name);
    }
    if (simulate->parsed()) {
      merge_config_file(args, *simulate);
      return cmd_simulate(args, trace_path, do_align, dump_channels);
    }
    if (replay->parsed()) return cmd_replay(replay_path);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
