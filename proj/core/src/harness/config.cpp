#include "rdfs/harness/config.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace rdfs::harness {

using nlohmann::json;

MissingArtifactError::MissingArtifactError(const std::filesystem::path& artifact, const std::string& command)
    : std::runtime_error("missing " + artifact.string() + "; run `rdfs " + command + "` first"), command_(command) {}

std::string task_name(Task task) {
  switch (task) {
    case Task::resize: return "resize";
    case Task::median: return "median";
    case Task::clahe: return "clahe";
  }
  return "?";
}

Task parse_task(const std::string& name) {
  if (name == "resize") return Task::resize;
  if (name == "median") return Task::median;
  if (name == "clahe") return Task::clahe;
  throw ConfigError("unknown task '" + name + "' (expected resize, median or clahe)");
}

std::string profile_name(Profile profile) { return profile == Profile::desk ? "desk" : "paper"; }

Profile parse_profile(const std::string& name) {
  if (name == "desk") return Profile::desk;
  if (name == "paper") return Profile::paper;
  throw ConfigError("unknown profile '" + name + "' (expected desk or paper)");
}

attack::AttackConfig AttackSettings::config_for(attack::AttackKind kind, Task task) const {
  switch (kind) {
    case attack::AttackKind::fgsm: return ifgsm;
    case attack::AttackKind::bfgs: return lbfgs;
    case attack::AttackKind::pgd: {
      const auto it = pgd_by_task.find(task);
      return it != pgd_by_task.end() ? it->second : pgd;
    }
  }
  return pgd;
}

det::CnnArchitecture Config::architecture() const {
  try {
    return det::architecture_by_id(plan.architecture, profile == Profile::paper ? det::Scale::paper : det::Scale::desk);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<std::size_t> Config::resolved_k_values() const {
  const std::size_t n = architecture().flatten_dim();
  std::vector<std::size_t> out;
  for (std::size_t k : plan.k_values) {
    const std::size_t v = k == 0 ? n : k;
    if (v <= n) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void Config::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  architecture();
  const auto& d = dataset;
  if (d.patch_side != architecture().patch_side())
    fail("dataset.patch_side " + std::to_string(d.patch_side) + " does not match the architecture input side " +
         std::to_string(architecture().patch_side()));
  if (d.train_per_class == 0 || d.val_per_class == 0 || d.test_per_class == 0)
    fail("dataset: per-class counts must be >= 1");
  if (d.max_per_image < 2) fail("dataset.max_per_image must be >= 2");
  if (!(d.train_fraction > 0) || !(d.val_fraction > 0) || d.train_fraction + d.val_fraction >= 1)
    fail("dataset: train_fraction and val_fraction must be > 0 and sum below 1");
  if (!(d.resize_factor > 0 && d.resize_factor <= 1)) fail("dataset.resize_factor must lie in (0, 1]");
  if (d.median_window < 3 || d.median_window % 2 == 0) fail("dataset.median_window must be odd and >= 3");
  if (d.source_dir.empty() && d.procedural_side < d.patch_side * 2)
    fail("dataset.procedural_side must be at least twice the patch side");
  try {
    training.cnn.validate();
    training.reduced.validate();
    attacks.ifgsm.validate();
    attacks.pgd.validate();
    for (const auto& [task, p] : attacks.pgd_by_task) p.validate();
    attacks.lbfgs.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (!(rdfs.train_fraction > 0 && rdfs.train_fraction <= 1)) fail("rdfs.train_fraction must lie in (0, 1]");
  if (rdfs.val_per_class == 0 || rdfs.test_per_class == 0) fail("rdfs: per-class counts must be >= 1");
  if (rdfs.val_per_class > d.val_per_class) fail("rdfs.val_per_class exceeds dataset.val_per_class");
  if (rdfs.test_per_class > d.test_per_class) fail("rdfs.test_per_class exceeds dataset.test_per_class");
  if (rdfs.svm.cv_folds < 2) fail("rdfs.svm.cv_folds must be >= 2");
  if (rdfs.kinds.empty()) fail("rdfs.kinds must not be empty");
  if (plan.tasks.empty()) fail("plan.tasks must not be empty");
  if (plan.repetitions == 0) fail("plan.repetitions must be >= 1");
  if (plan.threads == 0) fail("plan.threads must be >= 1");
  if (resolved_k_values().empty()) fail("plan.k_values holds no value <= N");
}

Config default_config(Profile profile, const std::string& architecture) {
  Config c;
  c.profile = profile;
  c.plan.architecture = architecture;
  const bool deep = architecture == "deep";
  if (profile == Profile::desk) {
    c.training.cnn.learning_rate = 1e-3;
    c.training.cnn.beta1 = 0.9;
    c.training.cnn.max_epochs = 8;
    c.training.reduced.learning_rate = 1e-3;
    c.training.reduced.beta1 = 0.9;
    c.training.reduced.max_epochs = 30;
    c.training.reduced.early_stop = det::EarlyStop{5, 1e-3};
    attack::PgdConfig clahe_pgd;
    clahe_pgd.epsilon = 0.025;
    clahe_pgd.alpha = 0.01;
    clahe_pgd.binary_search = false;
    c.attacks.pgd_by_task[Task::clahe] = clahe_pgd;
    return c;
  }
  c.dataset.procedural_sources = 8156;
  c.dataset.procedural_side = 512;
  c.dataset.patch_side = 64;
  c.dataset.train_per_class = deep ? 500000 : 100000;
  c.dataset.val_per_class = deep ? 5000 : 3000;
  c.dataset.test_per_class = 10000;
  c.training.cnn.learning_rate = 1e-4;
  c.training.cnn.beta1 = 0.99;
  c.training.cnn.max_epochs = deep ? 4 : 40;
  c.training.reduced.learning_rate = 1e-5;
  c.training.reduced.beta1 = 0.99;
  c.training.reduced.max_epochs = 50;
  c.training.reduced.early_stop = det::EarlyStop{5, 1e-3};
  c.attacks.patches = 500;
  attack::PgdConfig clahe_pgd;
  clahe_pgd.epsilon = 0.025;
  clahe_pgd.alpha = 0.01;
  clahe_pgd.binary_search = false;
  c.attacks.pgd_by_task[Task::clahe] = clahe_pgd;
  c.rdfs.train_fraction = 20000.0 / static_cast<double>(c.dataset.train_per_class);
  c.rdfs.val_per_class = 1000;
  c.rdfs.test_per_class = 4000;
  c.plan.tasks = {Task::resize, Task::median, Task::clahe};
  c.plan.k_values = {5, 10, 30, 50, 200, 400, 600, 0};
  c.plan.repetitions = 50;
  return c;
}

namespace {

// Reads the keys of one JSON object, rejecting any key not consumed.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("config: section '" + name_ + "' must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (seen_.count(it.key()) == 0) throw ConfigError("config: unknown key '" + name_ + "." + it.key() + "'");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + name_ + "." + key + "': " + e.what());
    }
  }
  bool has(const char* key) const { return j_.contains(key); }
  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }
  std::string path(const char* key) const { return name_ + "." + key; }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void read_train(const json& j, const std::string& name, det::TrainConfig& t) {
  Section s(j, name);
  s.get("learning_rate", t.learning_rate);
  s.get("beta1", t.beta1);
  s.get("beta2", t.beta2);
  s.get("epsilon", t.epsilon);
  s.get("batch_size", t.batch_size);
  s.get("max_epochs", t.max_epochs);
  s.get("eval_batch", t.eval_batch);
  if (s.has("early_stop")) {
    const auto& es = s.raw("early_stop");
    if (es.is_null()) {
      t.early_stop.reset();
    } else {
      det::EarlyStop e = t.early_stop.value_or(det::EarlyStop{});
      Section ess(es, name + ".early_stop");
      ess.get("window", e.window);
      ess.get("threshold", e.threshold);
      t.early_stop = e;
    }
  }
}

void read_pgd(const json& j, const std::string& name, attack::PgdConfig& p) {
  Section s(j, name);
  s.get("epsilon", p.epsilon);
  s.get("alpha", p.alpha);
  s.get("binary_search", p.binary_search);
  s.get("search_rounds", p.search_rounds);
  s.get("steps", p.steps);
}

json train_json(const det::TrainConfig& t) {
  json j{{"learning_rate", t.learning_rate}, {"beta1", t.beta1},           {"beta2", t.beta2},
         {"epsilon", t.epsilon},             {"batch_size", t.batch_size}, {"max_epochs", t.max_epochs},
         {"eval_batch", t.eval_batch}};
  j["early_stop"] = t.early_stop ? json{{"window", t.early_stop->window}, {"threshold", t.early_stop->threshold}}
                                 : json(nullptr);
  return j;
}

json pgd_json(const attack::PgdConfig& p) {
  return {{"epsilon", p.epsilon},
          {"alpha", p.alpha},
          {"binary_search", p.binary_search},
          {"search_rounds", p.search_rounds},
          {"steps", p.steps}};
}

}  // namespace

Config config_from_json(const std::string& text, std::optional<Profile> profile_override) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  Section top(doc, "config");
  std::string profile = "desk";
  top.get("profile", profile);
  std::string arch_id = "bayar_style";
  const json empty = json::object();
  const json& arch_section = doc.contains("architecture") ? top.raw("architecture") : empty;
  {
    Section a(arch_section, "architecture");
    a.get("id", arch_id);
  }
  Config c = default_config(profile_override ? *profile_override : parse_profile(profile), arch_id);

  if (doc.contains("dataset")) {
    Section s(top.raw("dataset"), "dataset");
    auto& d = c.dataset;
    s.get("source_dir", d.source_dir);
    s.get("procedural_sources", d.procedural_sources);
    s.get("procedural_side", d.procedural_side);
    s.get("patch_side", d.patch_side);
    s.get("train_per_class", d.train_per_class);
    s.get("val_per_class", d.val_per_class);
    s.get("test_per_class", d.test_per_class);
    s.get("max_per_image", d.max_per_image);
    s.get("train_fraction", d.train_fraction);
    s.get("val_fraction", d.val_fraction);
    s.get("resize_factor", d.resize_factor);
    s.get("median_window", d.median_window);
    if (s.has("clahe")) {
      Section cl(s.raw("clahe"), "dataset.clahe");
      cl.get("tiles_x", d.clahe.tiles_x);
      cl.get("tiles_y", d.clahe.tiles_y);
      cl.get("clip", d.clahe.clip);
    }
  }
  if (doc.contains("training")) {
    Section s(top.raw("training"), "training");
    if (s.has("cnn")) read_train(s.raw("cnn"), "training.cnn", c.training.cnn);
    if (s.has("reduced")) read_train(s.raw("reduced"), "training.reduced", c.training.reduced);
  }
  if (doc.contains("attacks")) {
    Section s(top.raw("attacks"), "attacks");
    auto& a = c.attacks;
    if (s.has("kinds")) {
      std::vector<std::string> names;
      s.get("kinds", names);
      a.kinds.clear();
      for (const auto& n : names) {
        try {
          a.kinds.push_back(attack::parse_attack(n));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
      }
    }
    s.get("patches", a.patches);
    if (s.has("ifgsm")) {
      Section f(s.raw("ifgsm"), "attacks.ifgsm");
      f.get("steps", a.ifgsm.steps);
      f.get("epsilons", a.ifgsm.epsilons);
    }
    if (s.has("pgd")) read_pgd(s.raw("pgd"), "attacks.pgd", a.pgd);
    if (s.has("pgd_by_task")) {
      const auto& by = s.raw("pgd_by_task");
      if (!by.is_object()) throw ConfigError("config: attacks.pgd_by_task must be an object");
      for (auto it = by.begin(); it != by.end(); ++it) {
        const Task t = parse_task(it.key());
        attack::PgdConfig p = a.pgd_by_task.count(t) ? a.pgd_by_task[t] : a.pgd;
        read_pgd(it.value(), "attacks.pgd_by_task." + it.key(), p);
        a.pgd_by_task[t] = p;
      }
    }
    if (s.has("lbfgs")) {
      Section l(s.raw("lbfgs"), "attacks.lbfgs");
      l.get("c_grid", a.lbfgs.c_grid);
      l.get("extend_steps", a.lbfgs.extend_steps);
      l.get("bisection_steps", a.lbfgs.bisection_steps);
      l.get("max_iterations", a.lbfgs.max_iterations);
      l.get("memory", a.lbfgs.memory);
    }
  }
  if (doc.contains("rdfs")) {
    Section s(top.raw("rdfs"), "rdfs");
    auto& r = c.rdfs;
    if (s.has("kinds")) {
      std::vector<std::string> names;
      s.get("kinds", names);
      r.kinds.clear();
      for (const auto& n : names) {
        try {
          r.kinds.push_back(defence::parse_kind(n));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
      }
    }
    s.get("train_fraction", r.train_fraction);
    s.get("val_per_class", r.val_per_class);
    s.get("test_per_class", r.test_per_class);
    if (s.has("svm")) {
      Section v(s.raw("svm"), "rdfs.svm");
      std::string kernel = std::string(defence::kernel_name(r.svm.kernel));
      v.get("kernel", kernel);
      try {
        r.svm.kernel = defence::parse_kernel(kernel);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      v.get("cv_folds", r.svm.cv_folds);
      v.get("linear_epochs", r.svm.linear_epochs);
      v.get("rbf_tolerance", r.svm.rbf_tolerance);
      v.get("rbf_max_iterations", r.svm.rbf_max_iterations);
      if (v.has("grid")) {
        defence::SvmGrid g;
        Section gs(v.raw("grid"), "rdfs.svm.grid");
        gs.get("C", g.c_values);
        gs.get("gamma", g.gamma_values);
        if (g.c_values.empty()) throw ConfigError("config: rdfs.svm.grid.C must not be empty");
        r.svm.grid = g;
      }
    }
  }
  if (doc.contains("plan")) {
    Section s(top.raw("plan"), "plan");
    auto& p = c.plan;
    if (s.has("tasks")) {
      std::vector<std::string> names;
      s.get("tasks", names);
      p.tasks.clear();
      for (const auto& n : names) p.tasks.push_back(parse_task(n));
    }
    if (s.has("k_values")) {
      p.k_values.clear();
      const auto& ks = s.raw("k_values");
      if (!ks.is_array()) throw ConfigError("config: plan.k_values must be an array");
      for (const auto& k : ks) {
        if (k.is_string() && k.get<std::string>() == "N") {
          p.k_values.push_back(0);
        } else if (k.is_number_unsigned() && k.get<std::size_t>() > 0) {
          p.k_values.push_back(k.get<std::size_t>());
        } else {
          throw ConfigError("config: plan.k_values entries must be positive integers or \"N\"");
        }
      }
    }
    s.get("repetitions", p.repetitions);
    s.get("seed", p.seed);
    s.get("threads", p.threads);
    if (s.has("execution_shuffle")) {
      const auto& v = s.raw("execution_shuffle");
      if (v.is_null()) p.execution_shuffle.reset();
      else p.execution_shuffle = v.get<std::uint64_t>();
    }
  }
  return c;
}

Config load_config(const std::filesystem::path& path, std::optional<Profile> profile_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str(), profile_override);
}

std::string config_to_json(const Config& c) {
  json attacks_kinds = json::array();
  for (auto k : c.attacks.kinds) attacks_kinds.push_back(attack::attack_name(k));
  json by_task = json::object();
  for (const auto& [t, p] : c.attacks.pgd_by_task) by_task[task_name(t)] = pgd_json(p);
  json rdfs_kinds = json::array();
  for (auto k : c.rdfs.kinds) rdfs_kinds.push_back(defence::kind_name(k));
  json tasks = json::array();
  for (auto t : c.plan.tasks) tasks.push_back(task_name(t));
  json ks = json::array();
  for (auto k : c.plan.k_values) ks.push_back(k == 0 ? json("N") : json(k));
  json svm{{"kernel", defence::kernel_name(c.rdfs.svm.kernel)},
           {"cv_folds", c.rdfs.svm.cv_folds},
           {"linear_epochs", c.rdfs.svm.linear_epochs},
           {"rbf_tolerance", c.rdfs.svm.rbf_tolerance},
           {"rbf_max_iterations", c.rdfs.svm.rbf_max_iterations}};
  if (c.rdfs.svm.grid) svm["grid"] = {{"C", c.rdfs.svm.grid->c_values}, {"gamma", c.rdfs.svm.grid->gamma_values}};
  const auto& d = c.dataset;
  json j{
      {"profile", profile_name(c.profile)},
      {"architecture", {{"id", c.plan.architecture}}},
      {"dataset",
       {{"source_dir", d.source_dir},
        {"procedural_sources", d.procedural_sources},
        {"procedural_side", d.procedural_side},
        {"patch_side", d.patch_side},
        {"train_per_class", d.train_per_class},
        {"val_per_class", d.val_per_class},
        {"test_per_class", d.test_per_class},
        {"max_per_image", d.max_per_image},
        {"train_fraction", d.train_fraction},
        {"val_fraction", d.val_fraction},
        {"resize_factor", d.resize_factor},
        {"median_window", d.median_window},
        {"clahe", {{"tiles_x", d.clahe.tiles_x}, {"tiles_y", d.clahe.tiles_y}, {"clip", d.clahe.clip}}}}},
      {"training", {{"cnn", train_json(c.training.cnn)}, {"reduced", train_json(c.training.reduced)}}},
      {"attacks",
       {{"kinds", attacks_kinds},
        {"patches", c.attacks.patches},
        {"ifgsm", {{"steps", c.attacks.ifgsm.steps}, {"epsilons", c.attacks.ifgsm.epsilons}}},
        {"pgd", pgd_json(c.attacks.pgd)},
        {"pgd_by_task", by_task},
        {"lbfgs",
         {{"c_grid", c.attacks.lbfgs.c_grid},
          {"extend_steps", c.attacks.lbfgs.extend_steps},
          {"bisection_steps", c.attacks.lbfgs.bisection_steps},
          {"max_iterations", c.attacks.lbfgs.max_iterations},
          {"memory", c.attacks.lbfgs.memory}}}}},
      {"rdfs",
       {{"kinds", rdfs_kinds},
        {"train_fraction", c.rdfs.train_fraction},
        {"val_per_class", c.rdfs.val_per_class},
        {"test_per_class", c.rdfs.test_per_class},
        {"svm", svm}}},
      {"plan",
       {{"tasks", tasks},
        {"k_values", ks},
        {"repetitions", c.plan.repetitions},
        {"seed", c.plan.seed},
        {"threads", c.plan.threads},
        {"execution_shuffle", c.plan.execution_shuffle ? json(*c.plan.execution_shuffle) : json(nullptr)}}},
  };
  return j.dump(2);
}

}  // namespace rdfs::harness
