#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tmv/automaton.hpp"
#include "tmv/history.hpp"
#include "tmv/opacity.hpp"
#include "tmv/stm.hpp"
#include "tmv/tms.hpp"

namespace {

using namespace tmv;

// Exit codes: 0 pass, 1 fail with counterexample, 2 usage, 3 resource cap.
// A resource failure is never a verdict.
constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;
constexpr int kResource = 3;

bool is_fine(const std::string& name) {
  return name == "tml" || name == "norec" || name == "ronorec";
}

std::unique_ptr<Automaton> make_model(const std::string& name, Bounds b,
                                      bool tso, int buf) {
  int bufsize = tso ? buf : 0;
  if (name == "tml")
    return std::make_unique<FineAutomaton>(StmKind::TML, b, bufsize);
  if (name == "norec")
    return std::make_unique<FineAutomaton>(StmKind::NORec, b, bufsize);
  if (name == "ronorec")
    return std::make_unique<FineAutomaton>(StmKind::RONORec, b, bufsize);
  if (name == "tml-cga")
    return std::make_unique<CgaAutomaton>(StmKind::TML, b);
  if (name == "norec-cga")
    return std::make_unique<CgaAutomaton>(StmKind::NORec, b);
  if (name == "ronorec-cga")
    return std::make_unique<CgaAutomaton>(StmKind::RONORec, b);
  if (name == "tms2") return std::make_unique<TmsAutomaton>(TmsVariant::TMS2, b);
  if (name == "tms3") return std::make_unique<TmsAutomaton>(TmsVariant::TMS3, b);
  throw std::invalid_argument("unknown model: " + name);
}

std::string read_input(const std::string& path) {
  std::ostringstream ss;
  if (path == "-") {
    ss << std::cin.rdbuf();
  } else {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    ss << in.rdbuf();
  }
  return ss.str();
}

void print_trace(std::ostream& os, const std::vector<Event>& trace, Bounds b) {
  History h;
  h.events = trace;
  h.bounds = b;
  os << serialize_history(h);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "bounded transactional-memory checks: opacity, trace refinement, "
      "forward simulation"};
  app.require_subcommand(1);

  int txns = 2, addrs = 2, vals = 2, buf = 2, jobs = 1;
  bool tso = false, witness = false;
  int64_t depth = -1;
  uint64_t max_states = SearchLimits{}.max_states;
  std::string file = "-", model_a, model_b, relation, out_path = "-";

  auto bounds_opts = [&](CLI::App* c) {
    c->add_option("--txns", txns, "transaction count");
    c->add_option("--addrs", addrs, "address count");
    c->add_option("--vals", vals, "value count");
    c->add_option("--max-states", max_states, "cap on interned states");
    c->add_option("--depth", depth, "depth cap, exceeding it is exit 3");
  };
  auto tso_opts = [&](CLI::App* c) {
    c->add_flag("--tso", tso,
                "give fine-grained models per-transaction store buffers");
    c->add_option("--buf", buf, "store buffer capacity under --tso");
  };
  auto limits = [&] {
    SearchLimits lim;
    lim.max_states = max_states;
    if (const char* env = std::getenv("TMV_MAX_STATES")) {
      char* end = nullptr;
      unsigned long long v = std::strtoull(env, &end, 10);
      if (end && *end == '\0' && v > 0) lim.max_states = v;
    }
    lim.max_depth = depth;
    return lim;
  };
  auto check_tso = [&] {
    if (tso && !is_fine(model_a) && !is_fine(model_b))
      throw std::invalid_argument(
          "--tso needs a fine-grained model (tml, norec, ronorec)");
  };

  int rc = kPass;

  auto* cop = app.add_subcommand("check-opacity",
                                 "check a history file for opacity");
  cop->add_option("file", file, "history file, - for stdin");
  cop->add_flag("--witness", witness, "print a sequential witness per prefix");
  cop->callback([&] {
    History h = parse_history(read_input(file));
    OpacityReport rep = check_opacity(h, witness);
    if (!rep.opaque) {
      std::cout << "not opaque: prefix of length " << rep.failing_prefix
                << " has no opaque completion\n";
      History p{{h.events.begin(), h.events.begin() + rep.failing_prefix},
                h.bounds};
      std::cout << serialize_history(p);
      rc = kFail;
      return;
    }
    std::cout << "opaque\n";
    if (witness)
      for (size_t i = 0; i < rep.witnesses.size(); ++i)
        std::cout << "\n# prefix " << i << ": sequential witness\n"
                  << serialize_history(rep.witnesses[i].sequential);
  });

  auto* ref = app.add_subcommand(
      "refine", "check that every trace of impl is a trace of spec");
  ref->add_option("spec", model_a, "specification model")->required();
  ref->add_option("impl", model_b, "implementation model")->required();
  bounds_opts(ref);
  tso_opts(ref);
  ref->callback([&] {
    check_tso();
    Bounds b{txns, addrs, vals};
    auto spec = make_model(model_a, b, tso, buf);
    auto impl = make_model(model_b, b, tso, buf);
    RefinementResult r = refines(*spec, *impl, limits());
    if (r.pass) {
      std::cout << "pass: " << impl->name() << " refines " << spec->name()
                << " (" << r.explored << " product states)\n";
    } else {
      std::cout << "fail: trace of " << impl->name() << " rejected by "
                << spec->name() << "\n";
      print_trace(std::cout, r.counterexample, b);
      rc = kFail;
    }
  });

  auto* eq = app.add_subcommand("equiv",
                                "check trace equivalence of two models");
  eq->add_option("a", model_a, "first model")->required();
  eq->add_option("b", model_b, "second model")->required();
  bounds_opts(eq);
  tso_opts(eq);
  eq->add_option("--jobs", jobs, "parallelize the two refinement directions");
  eq->callback([&] {
    check_tso();
    Bounds b{txns, addrs, vals};
    auto ma = make_model(model_a, b, tso, buf);
    auto mb = make_model(model_b, b, tso, buf);
    EquivalenceResult r = equivalent_lts(*ma, *mb, limits(), jobs);
    if (r.pass) {
      std::cout << "pass: " << ma->name() << " and " << mb->name()
                << " are trace equivalent\n";
    } else {
      const Automaton& missing = r.direction == 0 ? *ma : *mb;
      const Automaton& source = r.direction == 0 ? *mb : *ma;
      std::cout << "fail: trace of " << source.name() << " not accepted by "
                << missing.name() << "\n";
      print_trace(std::cout, r.counterexample, b);
      rc = kFail;
    }
  });

  auto* dis = app.add_subcommand(
      "distinguish", "find a shortest trace of a that b rejects");
  dis->add_option("a", model_a, "model whose trace to find")->required();
  dis->add_option("b", model_b, "model that must reject it")->required();
  bounds_opts(dis);
  tso_opts(dis);
  dis->callback([&] {
    check_tso();
    Bounds b{txns, addrs, vals};
    auto ma = make_model(model_a, b, tso, buf);
    auto mb = make_model(model_b, b, tso, buf);
    RefinementResult r = refines(*mb, *ma, limits());
    if (r.pass) {
      std::cout << "none found: every trace of " << ma->name()
                << " is a trace of " << mb->name() << " at these bounds\n";
      rc = kFail;
    } else {
      print_trace(std::cout, r.counterexample, b);
    }
  });

  auto* sim = app.add_subcommand(
      "simcheck", "check a forward simulation between impl and spec");
  sim->add_option("impl", model_a, "implementation model")->required();
  sim->add_option("spec", model_b, "specification model")->required();
  sim->add_option("relation", relation,
                  "tml-tms2 | norec-tms3 | ronorec-tms3 | tms3-tms2 | tms2-tms3")
      ->required();
  bounds_opts(sim);
  sim->callback([&] {
    Bounds b{txns, addrs, vals};
    auto expect = [&](const char* i, const char* s) {
      if (model_a != i || model_b != s)
        throw std::invalid_argument("relation " + relation +
                                    " applies to impl " + i + " and spec " + s);
    };
    std::unique_ptr<CgaAutomaton> cga;
    std::unique_ptr<TmsAutomaton> tms_i, tms_s;
    const Automaton* impl = nullptr;
    const Automaton* spec = nullptr;
    SimulationRelation rel;
    if (relation == "tml-tms2") {
      expect("tml-cga", "tms2");
      cga = std::make_unique<CgaAutomaton>(StmKind::TML, b);
      tms_s = std::make_unique<TmsAutomaton>(TmsVariant::TMS2, b);
      rel = tml_cga_vs_tms2(*cga, *tms_s);
      impl = cga.get();
      spec = tms_s.get();
    } else if (relation == "norec-tms3") {
      expect("norec-cga", "tms3");
      cga = std::make_unique<CgaAutomaton>(StmKind::NORec, b);
      tms_s = std::make_unique<TmsAutomaton>(TmsVariant::TMS3, b);
      rel = norec_cga_vs_tms3(*cga, *tms_s);
      impl = cga.get();
      spec = tms_s.get();
    } else if (relation == "ronorec-tms3") {
      expect("ronorec-cga", "tms3");
      cga = std::make_unique<CgaAutomaton>(StmKind::RONORec, b);
      tms_s = std::make_unique<TmsAutomaton>(TmsVariant::TMS3, b);
      rel = ronorec_cga_vs_tms3(*cga, *tms_s);
      impl = cga.get();
      spec = tms_s.get();
    } else if (relation == "tms3-tms2") {
      expect("tms3", "tms2");
      tms_i = std::make_unique<TmsAutomaton>(TmsVariant::TMS3, b);
      tms_s = std::make_unique<TmsAutomaton>(TmsVariant::TMS2, b);
      rel = tms_vs_tms(*tms_i, *tms_s);
      impl = tms_i.get();
      spec = tms_s.get();
    } else if (relation == "tms2-tms3") {
      expect("tms2", "tms3");
      tms_i = std::make_unique<TmsAutomaton>(TmsVariant::TMS2, b);
      tms_s = std::make_unique<TmsAutomaton>(TmsVariant::TMS3, b);
      rel = tms_vs_tms(*tms_i, *tms_s);
      impl = tms_i.get();
      spec = tms_s.get();
    } else {
      throw std::invalid_argument("unknown relation: " + relation);
    }
    SimResult r = check_forward_simulation(*impl, *spec, rel, limits());
    if (r.pass) {
      std::cout << "pass: forward simulation holds over " << r.pairs_explored
                << " related pairs\n";
    } else {
      std::cout << "fail: " << r.reason << "\n";
      std::cout << "impl state: " << impl->describe_state(r.concrete) << "\n";
      std::cout << "spec state: " << spec->describe_state(r.abstract_) << "\n";
      std::cout << "action: "
                << (r.action.external
                        ? r.action.event.to_string()
                        : impl->describe_internal(r.action.internal))
                << "\n";
      rc = kFail;
    }
  });

  auto* en = app.add_subcommand(
      "enumerate", "write every external trace up to a depth");
  en->add_option("model", model_a, "model to enumerate")->required();
  en->add_option("output", out_path, "output file, - for stdout");
  bounds_opts(en);
  tso_opts(en);
  en->callback([&] {
    check_tso();
    Bounds b{txns, addrs, vals};
    auto m = make_model(model_a, b, tso, buf);
    std::ofstream fout;
    std::ostream* os = &std::cout;
    if (out_path != "-") {
      fout.open(out_path);
      if (!fout) throw std::invalid_argument("cannot open " + out_path);
      os = &fout;
    }
    SearchLimits lim = limits();
    lim.max_depth = -1;
    bool first = true;
    traces(
        *m, depth < 0 ? 6 : depth,
        [&](const std::vector<Event>& tr) {
          if (!first) *os << "\n";
          first = false;
          print_trace(*os, tr, b);
        },
        lim);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  } catch (const ResourceLimitError& e) {
    std::cerr << "resource limit exceeded: " << e.what() << "\n";
    return kResource;
  } catch (const ParseError& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  } catch (const std::bad_alloc&) {
    std::cerr << "out of memory\n";
    return kResource;
  }
  return rc;
}
