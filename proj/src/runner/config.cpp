#include "ofe/runner/config.hpp"

#include "ofe/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ofe {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: '" + key + "' expects true/false, got '" + v + "'");
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
  return os.str();
}

std::string real_text(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void set_config_value(ExperimentConfig& c, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string v = trim(raw_value);
  try {
    if (key == "env") c.env = v;
    else if (key == "agent") {
      if (v != "sac" && v != "td3") throw ConfigError("config: unknown agent '" + v + "'");
      c.agent = v;
    } else if (key == "extractor") {
      if (v != "ofe" && v != "raw" && v != "ml_third" && v != "ml_ofelike") {
        throw ConfigError("config: unknown extractor '" + v + "'");
      }
      c.extractor = v;
    } else if (key == "arch") {
      if (v != "auto" && v != "manual") throw ConfigError("config: arch must be auto or manual");
      c.auto_arch = v == "auto";
    } else if (key == "connectivity") c.connectivity = parse_connectivity(v);
    else if (key == "layers") c.layers = parse_integer<int>(key, v);
    else if (key == "increment") c.increment = parse_integer<int>(key, v);
    else if (key == "activation") c.activation = parse_activation(v);
    else if (key == "batch_norm") c.batch_norm = parse_bool(key, v);
    else if (key == "seeds") {
      c.seeds.clear();
      for (const auto& s : split_list(v)) c.seeds.push_back(parse_integer<std::uint64_t>(key, s));
    } else if (key == "total_steps") c.total_steps = parse_integer<std::size_t>(key, v);
    else if (key == "warmup_steps") c.warmup_steps = parse_integer<std::size_t>(key, v);
    else if (key == "pretrain_steps") c.pretrain_steps = parse_integer<long>(key, v);
    else if (key == "eval_interval") c.eval_interval = parse_integer<std::size_t>(key, v);
    else if (key == "eval_episodes") c.eval_episodes = parse_integer<int>(key, v);
    else if (key == "actual_score_window") c.actual_score_window = parse_integer<std::size_t>(key, v);
    else if (key == "batch_size") c.batch_size = parse_integer<std::size_t>(key, v);
    else if (key == "buffer_capacity") c.buffer_capacity = parse_integer<std::size_t>(key, v);
    else if (key == "hidden") {
      c.hidden.clear();
      for (const auto& s : split_list(v)) c.hidden.push_back(parse_integer<Eigen::Index>(key, s));
    } else if (key == "learning_rate") c.learning_rate = parse_real(key, v);
    else if (key == "ofe_learning_rate") c.ofe_learning_rate = parse_real(key, v);
    else if (key == "gamma") c.gamma = parse_real(key, v);
    else if (key == "tau") c.tau = parse_real(key, v);
    else if (key == "target_score") {
      c.target_score = v.empty() ? std::numeric_limits<double>::quiet_NaN() : parse_real(key, v);
    } else if (key == "no_bn") c.ablations.no_bn = parse_bool(key, v);
    else if (key == "no_aux") c.ablations.no_aux = parse_bool(key, v);
    else if (key == "same_params") c.ablations.same_params = parse_bool(key, v);
    else if (key == "freeze_ofe") c.ablations.freeze_ofe = parse_bool(key, v);
    else if (key == "combine_ablations") c.ablations.combine = parse_bool(key, v);
    else if (key == "dim_sweep") {
      c.ablations.dim_sweep.clear();
      for (const auto& s : split_list(v)) c.ablations.dim_sweep.push_back(parse_integer<int>(key, s));
    } else if (key == "corpus_train") c.corpus_train = parse_integer<std::size_t>(key, v);
    else if (key == "corpus_test") c.corpus_test = parse_integer<std::size_t>(key, v);
    else if (key == "arch_train_steps") c.arch_train_steps = parse_integer<std::size_t>(key, v);
    else if (key == "arch_seeds") c.arch_seeds = parse_integer<int>(key, v);
    else if (key == "output_dir") c.output_dir = v;
    else if (key == "label") c.label = v;
    else throw ConfigError("config: unknown key '" + key + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config: bad value for '" + key + "': " + e.what());
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    set_config_value(c, line.substr(0, eq), line.substr(eq + 1));
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_overrides(ExperimentConfig& config, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + a + "' is not key=value");
    set_config_value(config, a.substr(0, eq), a.substr(eq + 1));
  }
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("config: seeds must not be empty");
  if (total_steps == 0) throw ConfigError("config: total_steps must be positive");
  if (warmup_steps == 0 || warmup_steps >= total_steps) {
    throw ConfigError("config: need 0 < warmup_steps < total_steps");
  }
  if (eval_interval == 0 || total_steps % eval_interval != 0) {
    throw ConfigError("config: eval_interval must be positive and divide total_steps");
  }
  if (actual_score_window == 0 || actual_score_window % eval_interval != 0) {
    throw ConfigError("config: actual_score_window must be a positive multiple of eval_interval");
  }
  if (eval_episodes <= 0) throw ConfigError("config: eval_episodes must be positive");
  if (batch_size < 2) throw ConfigError("config: batch_size must be at least 2");
  if (buffer_capacity == 0) throw ConfigError("config: buffer_capacity must be positive");
  if (hidden.empty()) throw ConfigError("config: hidden must list at least one width");
  for (auto h : hidden) {
    if (h <= 0) throw ConfigError("config: hidden widths must be positive");
  }
  if (!(learning_rate > 0.0) || !(ofe_learning_rate > 0.0)) {
    throw ConfigError("config: learning rates must be positive");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0) || !(tau > 0.0 && tau <= 1.0)) {
    throw ConfigError("config: gamma must lie in [0, 1] and tau in (0, 1]");
  }
  if (layers <= 0 || increment <= 0) throw ConfigError("config: layers and increment must be positive");
  if (arch_seeds <= 0) throw ConfigError("config: arch_seeds must be positive");
  for (int w : ablations.dim_sweep) {
    if (w <= 0) throw ConfigError("config: dim_sweep widths must be positive");
  }
}

std::size_t ExperimentConfig::effective_pretrain_steps() const {
  return pretrain_steps < 0 ? warmup_steps : static_cast<std::size_t>(pretrain_steps);
}

std::string ExperimentConfig::effective_label() const {
  if (!label.empty()) return label;
  std::string out = env + "-" + agent + "-" + extractor;
  if (ablations.no_bn) out += "-no_bn";
  if (ablations.no_aux) out += "-no_aux";
  if (ablations.same_params) out += "-same_params";
  if (ablations.freeze_ofe) out += "-freeze_ofe";
  return out;
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream os;
  auto b = [](bool x) { return x ? "true" : "false"; };
  os << "env = " << c.env << "\n"
     << "agent = " << c.agent << "\n"
     << "extractor = " << c.extractor << "\n"
     << "arch = " << (c.auto_arch ? "auto" : "manual") << "\n"
     << "connectivity = " << to_string(c.connectivity) << "\n"
     << "layers = " << c.layers << "\n"
     << "increment = " << c.increment << "\n"
     << "activation = " << to_string(c.activation) << "\n"
     << "batch_norm = " << b(c.batch_norm) << "\n"
     << "seeds = " << join(c.seeds) << "\n"
     << "total_steps = " << c.total_steps << "\n"
     << "warmup_steps = " << c.warmup_steps << "\n"
     << "pretrain_steps = " << c.pretrain_steps << "\n"
     << "eval_interval = " << c.eval_interval << "\n"
     << "eval_episodes = " << c.eval_episodes << "\n"
     << "actual_score_window = " << c.actual_score_window << "\n"
     << "batch_size = " << c.batch_size << "\n"
     << "buffer_capacity = " << c.buffer_capacity << "\n"
     << "hidden = " << join(c.hidden) << "\n"
     << "learning_rate = " << real_text(c.learning_rate) << "\n"
     << "ofe_learning_rate = " << real_text(c.ofe_learning_rate) << "\n"
     << "gamma = " << real_text(c.gamma) << "\n"
     << "tau = " << real_text(c.tau) << "\n"
     << "target_score = " << real_text(c.target_score) << "\n"
     << "no_bn = " << b(c.ablations.no_bn) << "\n"
     << "no_aux = " << b(c.ablations.no_aux) << "\n"
     << "same_params = " << b(c.ablations.same_params) << "\n"
     << "freeze_ofe = " << b(c.ablations.freeze_ofe) << "\n"
     << "combine_ablations = " << b(c.ablations.combine) << "\n"
     << "dim_sweep = " << join(c.ablations.dim_sweep) << "\n"
     << "corpus_train = " << c.corpus_train << "\n"
     << "corpus_test = " << c.corpus_test << "\n"
     << "arch_train_steps = " << c.arch_train_steps << "\n"
     << "arch_seeds = " << c.arch_seeds << "\n"
     << "output_dir = " << c.output_dir.string() << "\n"
     << "label = " << c.label << "\n";
  return os.str();
}

}  // namespace ofe
