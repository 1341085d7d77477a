#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "seqtrain/experiment.hpp"
#include "seqtrain/serialize.hpp"
#include "text.hpp"

namespace seqtrain {

namespace {

using Setter = std::function<std::string(ExperimentConfig&, std::string_view)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Key {
  std::string name;
  Setter set;  // returns an error message, empty on success
  Getter get;
};

std::string bad(std::string_view what, std::string_view value) {
  return "expected " + std::string(what) + ", got '" + std::string(value) + "'";
}

Setter real_setter(std::function<double&(ExperimentConfig&)> field, std::function<bool(double)> ok,
                   std::string what) {
  return [=](ExperimentConfig& c, std::string_view v) -> std::string {
    auto x = text::parse_number<double>(v);
    if (!x || !std::isfinite(*x)) return bad("a finite real", v);
    if (!ok(*x)) return "value " + std::string(v) + " violates: " + what;
    field(c) = *x;
    return {};
  };
}

template <typename Int>
Setter int_setter(std::function<Int&(ExperimentConfig&)> field, long long min_value) {
  return [=](ExperimentConfig& c, std::string_view v) -> std::string {
    auto x = text::parse_number<long long>(v);
    if (!x) return bad("an integer", v);
    if (*x < min_value) return "value " + std::string(v) + " must be >= " + std::to_string(min_value);
    field(c) = static_cast<Int>(*x);
    return {};
  };
}

Setter seed_setter(std::function<std::uint64_t&(ExperimentConfig&)> field) {
  return [=](ExperimentConfig& c, std::string_view v) -> std::string {
    auto x = text::parse_number<std::uint64_t>(v);
    if (!x) return bad("an unsigned 64-bit integer", v);
    field(c) = *x;
    return {};
  };
}

Setter activation_setter(std::function<Activation&(ExperimentConfig&)> field) {
  return [=](ExperimentConfig& c, std::string_view v) -> std::string {
    auto a = parse_activation(v);
    if (!a) return bad("relu, identity or tanh", v);
    field(c) = *a;
    return {};
  };
}

std::string join_widths(const std::vector<Index>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
  return s;
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    const auto real = [](double v) { return format_real(v); };

    k.push_back({"arch.input_dim", int_setter<Index>([](auto& c) -> Index& { return c.arch.input_dim; }, 1),
                 [](auto& c) { return std::to_string(c.arch.input_dim); }});
    k.push_back({"arch.hidden",
                 [](ExperimentConfig& c, std::string_view v) -> std::string {
                   std::vector<Index> widths;
                   for (auto part : text::split(v, ',')) {
                     auto w = text::parse_number<long long>(text::trim(part));
                     if (!w || *w < 1) return bad("a comma-separated list of positive integers", v);
                     widths.push_back(static_cast<Index>(*w));
                   }
                   c.arch.hidden_widths = std::move(widths);
                   return {};
                 },
                 [](auto& c) { return join_widths(c.arch.hidden_widths); }});
    k.push_back({"arch.hidden_activation",
                 activation_setter([](auto& c) -> Activation& { return c.arch.hidden_activation; }),
                 [](auto& c) { return std::string(to_string(c.arch.hidden_activation)); }});
    k.push_back({"arch.output_activation",
                 activation_setter([](auto& c) -> Activation& { return c.arch.output_activation; }),
                 [](auto& c) { return std::string(to_string(c.arch.output_activation)); }});

    k.push_back({"data.n", int_setter<Index>([](auto& c) -> Index& { return c.data.n; }, 1),
                 [](auto& c) { return std::to_string(c.data.n); }});
    k.push_back({"data.x0_low",
                 real_setter([](auto& c) -> double& { return c.data.x0_low; }, [](double x) { return x > 0; }, "> 0"),
                 [=](auto& c) { return real(c.data.x0_low); }});
    k.push_back({"data.x0_high",
                 real_setter([](auto& c) -> double& { return c.data.x0_high; }, [](double x) { return x > 0; }, "> 0"),
                 [=](auto& c) { return real(c.data.x0_high); }});
    k.push_back({"data.a_low",
                 real_setter([](auto& c) -> double& { return c.data.a_low; }, [](double) { return true; }, ""),
                 [=](auto& c) { return real(c.data.a_low); }});
    k.push_back({"data.a_high",
                 real_setter([](auto& c) -> double& { return c.data.a_high; }, [](double) { return true; }, ""),
                 [=](auto& c) { return real(c.data.a_high); }});
    k.push_back({"data.t1",
                 real_setter([](auto& c) -> double& { return c.data.t1; }, [](double) { return true; }, ""),
                 [=](auto& c) { return real(c.data.t1); }});
    k.push_back({"data.seed", seed_setter([](auto& c) -> std::uint64_t& { return c.data.seed; }),
                 [](auto& c) { return std::to_string(c.data.seed); }});
    k.push_back({"data.val_fraction",
                 real_setter([](auto& c) -> double& { return c.val_fraction; },
                             [](double x) { return x > 0 && x < 1; }, "in (0, 1)"),
                 [=](auto& c) { return real(c.val_fraction); }});
    k.push_back({"data.standardize",
                 [](ExperimentConfig& c, std::string_view v) -> std::string {
                   if (v == "true") c.standardize = true;
                   else if (v == "false") c.standardize = false;
                   else return bad("true or false", v);
                   return {};
                 },
                 [](auto& c) { return std::string(c.standardize ? "true" : "false"); }});

    k.push_back({"train.optimizer",
                 [](ExperimentConfig& c, std::string_view v) -> std::string {
                   if (v == "sgd") c.train.optimizer = OptimizerKind::sgd;
                   else if (v == "adam") c.train.optimizer = OptimizerKind::adam;
                   else return bad("sgd or adam", v);
                   return {};
                 },
                 [](auto& c) { return std::string(to_string(c.train.optimizer)); }});
    k.push_back({"train.learning_rate",
                 real_setter([](auto& c) -> double& { return c.train.learning_rate; },
                             [](double x) { return x > 0; }, "> 0"),
                 [=](auto& c) { return real(c.train.learning_rate); }});
    k.push_back({"train.batch_size", int_setter<Index>([](auto& c) -> Index& { return c.train.batch_size; }, 1),
                 [](auto& c) { return std::to_string(c.train.batch_size); }});
    k.push_back({"train.epochs", int_setter<std::size_t>([](auto& c) -> std::size_t& { return c.train.epochs; }, 1),
                 [](auto& c) { return std::to_string(c.train.epochs); }});
    k.push_back({"train.loss",
                 [](ExperimentConfig& c, std::string_view v) -> std::string {
                   if (v == "l1") c.train.loss = LossNorm::l1;
                   else if (v == "l2") c.train.loss = LossNorm::l2;
                   else return bad("l1 or l2", v);
                   return {};
                 },
                 [](auto& c) { return std::string(to_string(c.train.loss)); }});
    k.push_back({"train.seed", seed_setter([](auto& c) -> std::uint64_t& { return c.train.seed; }),
                 [](auto& c) { return std::to_string(c.train.seed); }});
    k.push_back({"train.adam_beta1",
                 real_setter([](auto& c) -> double& { return c.train.adam_beta1; },
                             [](double x) { return x > 0 && x < 1; }, "in (0, 1)"),
                 [=](auto& c) { return real(c.train.adam_beta1); }});
    k.push_back({"train.adam_beta2",
                 real_setter([](auto& c) -> double& { return c.train.adam_beta2; },
                             [](double x) { return x > 0 && x < 1; }, "in (0, 1)"),
                 [=](auto& c) { return real(c.train.adam_beta2); }});
    k.push_back({"train.adam_epsilon",
                 real_setter([](auto& c) -> double& { return c.train.adam_epsilon; },
                             [](double x) { return x > 0; }, "> 0"),
                 [=](auto& c) { return real(c.train.adam_epsilon); }});

    k.push_back({"experiment.strategies",
                 [](ExperimentConfig& c, std::string_view v) -> std::string {
                   std::vector<Strategy> s;
                   for (auto part : text::split(v, ',')) {
                     part = text::trim(part);
                     Strategy st;
                     if (part == "full") st = Strategy::full;
                     else if (part == "sequential") st = Strategy::sequential;
                     else return bad("a comma-separated subset of {full, sequential}", v);
                     if (std::find(s.begin(), s.end(), st) != s.end()) return "duplicate strategy '" + std::string(part) + "'";
                     s.push_back(st);
                   }
                   c.strategies = std::move(s);
                   return {};
                 },
                 [](auto& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.strategies.size(); ++i)
                     s += (i ? "," : "") + std::string(to_string(c.strategies[i]));
                   return s;
                 }});
    k.push_back({"experiment.seeds", int_setter<std::size_t>([](auto& c) -> std::size_t& { return c.seeds; }, 1),
                 [](auto& c) { return std::to_string(c.seeds); }});
    k.push_back({"experiment.budget",
                 [](ExperimentConfig& c, std::string_view v) -> std::string {
                   if (v == "per_stage") c.budget = BudgetMode::per_stage;
                   else if (v == "matched_total") c.budget = BudgetMode::matched_total;
                   else return bad("per_stage or matched_total", v);
                   return {};
                 },
                 [](auto& c) { return std::string(to_string(c.budget)); }});
    k.push_back({"experiment.out_dir",
                 [](ExperimentConfig& c, std::string_view v) -> std::string {
                   if (v.empty()) return "output directory must not be empty";
                   c.out_dir = std::string(v);
                   return {};
                 },
                 [](auto& c) { return c.out_dir.string(); }});
    k.push_back({"experiment.threads", int_setter<std::size_t>([](auto& c) -> std::size_t& { return c.threads; }, 1),
                 [](auto& c) { return std::to_string(c.threads); }});
    return k;
  }();
  return table;
}

}  // namespace

std::vector<std::uint64_t> ExperimentConfig::run_seeds() const {
  std::vector<std::uint64_t> s;
  for (std::size_t i = 0; i < seeds; ++i) s.push_back(train.seed + i);
  return s;
}

void validate(const ExperimentConfig& cfg) {
  cfg.arch.validate();
  cfg.data.validate();
  cfg.train.validate();
  require(cfg.train.learning_rate > 0.0, "train.learning_rate must be > 0");
  require(cfg.arch.input_dim == 2, "arch.input_dim must be 2 (the generator emits two measurements)");
  require(!cfg.strategies.empty(), "experiment.strategies must name at least one strategy");
  require(cfg.seeds >= 1, "experiment.seeds must be >= 1");
  require(cfg.threads >= 1, "experiment.threads must be >= 1");
  const auto n_train = static_cast<Index>(std::ceil(static_cast<double>(cfg.data.n) * (1.0 - cfg.val_fraction)));
  require(n_train >= 1 && n_train < cfg.data.n,
          "data.n and data.val_fraction leave an empty training or validation partition");
}

ExperimentConfig parse_config(std::string_view contents) {
  ExperimentConfig cfg;
  std::map<std::string, std::size_t, std::less<>> seen;
  std::size_t line_no = 0;
  for (auto raw : text::split(contents, '\n')) {
    ++line_no;
    auto line = raw.substr(0, raw.find('#'));
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'section.key = value'");
    const auto name = text::trim(line.substr(0, eq));
    const auto value = text::trim(line.substr(eq + 1));
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == name; });
    if (it == table.end()) throw ParseError(line_no, "unknown key '" + std::string(name) + "'");
    if (const auto err = it->set(cfg, value); !err.empty())
      throw ParseError(line_no, "key '" + std::string(name) + "': " + err);
    seen[std::string(name)] = line_no;
  }

  const auto fail_on = [&](std::initializer_list<const char*> involved, const std::string& what) {
    std::size_t line = 0;
    for (const char* k : involved)
      if (auto it = seen.find(k); it != seen.end()) line = std::max(line, it->second);
    std::string names;
    for (const char* k : involved) names += (names.empty() ? "" : ", ") + std::string(k);
    throw ParseError(line, "key(s) " + names + ": " + what);
  };
  if (cfg.data.x0_low > cfg.data.x0_high) fail_on({"data.x0_low", "data.x0_high"}, "x0 range must satisfy low <= high");
  if (cfg.data.a_low > cfg.data.a_high) fail_on({"data.a_low", "data.a_high"}, "a range must satisfy low <= high");
  if (cfg.arch.input_dim != 2) fail_on({"arch.input_dim"}, "must be 2 (the generator emits two measurements)");
  try {
    validate(cfg);
  } catch (const ContractViolation& e) {
    fail_on({"data.n", "data.val_fraction"}, e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string echo_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& k : keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

}  // namespace seqtrain
