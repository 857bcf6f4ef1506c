#include "lane/runconfig.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lane {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) {
      throw std::runtime_error("config: unknown field '" + key + "' in " + where);
    }
  }
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

json model_to_json(const ModelConfig& m) {
  return json{{"d_model", m.d_model},
              {"n_heads", m.n_heads},
              {"k_blocks", m.k_blocks},
              {"t_sc", m.t_sc},
              {"m_max", m.m_max},
              {"l_sub", m.l_sub},
              {"d_ff", m.d_ff},
              {"n_enc_layers", m.n_enc_layers},
              {"n_ar_layers", m.n_ar_layers},
              {"n_freq", m.n_freq},
              {"counts", {m.counts.n1, m.counts.n2, m.counts.n3, m.counts.n4}}};
}

ModelConfig model_from_json(const json& j) {
  ModelConfig m;
  reject_unknown(j,
                 {"d_model", "n_heads", "k_blocks", "t_sc", "m_max", "l_sub", "d_ff",
                  "n_enc_layers", "n_ar_layers", "n_freq", "counts"},
                 "model");
  m.d_model = j.value("d_model", m.d_model);
  m.n_heads = j.value("n_heads", m.n_heads);
  m.k_blocks = j.value("k_blocks", m.k_blocks);
  m.t_sc = j.value("t_sc", m.t_sc);
  m.m_max = j.value("m_max", m.m_max);
  m.l_sub = j.value("l_sub", m.l_sub);
  m.d_ff = j.value("d_ff", m.d_ff);
  m.n_enc_layers = j.value("n_enc_layers", m.n_enc_layers);
  m.n_ar_layers = j.value("n_ar_layers", m.n_ar_layers);
  m.n_freq = j.value("n_freq", m.n_freq);
  if (j.contains("counts")) {
    const auto c = j.at("counts").get<std::vector<int64_t>>();
    if (c.size() != 4) throw std::runtime_error("config: counts must be [N1,N2,N3,N4]");
    m.counts = {c[0], c[1], c[2], c[3]};
  }
  m.validate();
  return m;
}

}  // namespace

uint64_t RunConfig::config_hash() const {
  json j;
  j["model"] = model_to_json(model);
  j["scheme"] = scheme_name(scheme);
  return fnv1a(j.dump());
}

RunConfig run_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  reject_unknown(j, {"model", "scheme", "seed", "dataset", "schedule", "out_dir"}, "config root");
  RunConfig cfg;
  if (j.contains("model")) cfg.model = model_from_json(j.at("model"));
  if (j.contains("scheme")) cfg.scheme = scheme_from_string(j.at("scheme").get<std::string>());
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    reject_unknown(d, {"shapes", "corrupt_fraction"}, "dataset");
    if (d.contains("shapes")) {
      cfg.dataset.shapes.clear();
      for (const json& s : d.at("shapes")) {
        reject_unknown(s, {"kind", "resolution", "jitter"}, "dataset.shapes");
        ShapeSpec spec;
        spec.kind = s.value("kind", spec.kind);
        spec.resolution = s.value("resolution", spec.resolution);
        spec.jitter = s.value("jitter", spec.jitter);
        cfg.dataset.shapes.push_back(spec);
      }
    }
    cfg.dataset.corrupt_fraction = d.value("corrupt_fraction", cfg.dataset.corrupt_fraction);
  }
  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    reject_unknown(
        s, {"steps", "lr_max", "lr_min", "batch_size", "checkpoint_every", "log_every", "m_policy"},
        "schedule");
    cfg.schedule.steps = s.value("steps", cfg.schedule.steps);
    cfg.schedule.lr_max = s.value("lr_max", cfg.schedule.lr_max);
    cfg.schedule.lr_min = s.value("lr_min", cfg.schedule.lr_min);
    cfg.schedule.batch_size = s.value("batch_size", cfg.schedule.batch_size);
    cfg.schedule.checkpoint_every = s.value("checkpoint_every", cfg.schedule.checkpoint_every);
    cfg.schedule.log_every = s.value("log_every", cfg.schedule.log_every);
    cfg.schedule.m_policy = s.value("m_policy", cfg.schedule.m_policy);
    if (cfg.schedule.m_policy != "uniform" && cfg.schedule.m_policy.rfind("fixed:", 0) != 0) {
      throw std::runtime_error("config: m_policy must be 'uniform' or 'fixed:<m>'");
    }
  }
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return run_config_from_json(buf.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["model"] = model_to_json(cfg.model);
  j["scheme"] = scheme_name(cfg.scheme);
  j["seed"] = cfg.seed;
  json shapes = json::array();
  for (const ShapeSpec& s : cfg.dataset.shapes) {
    shapes.push_back({{"kind", s.kind}, {"resolution", s.resolution}, {"jitter", s.jitter}});
  }
  j["dataset"] = {{"shapes", shapes}, {"corrupt_fraction", cfg.dataset.corrupt_fraction}};
  j["schedule"] = {{"steps", cfg.schedule.steps},
                   {"lr_max", cfg.schedule.lr_max},
                   {"lr_min", cfg.schedule.lr_min},
                   {"batch_size", cfg.schedule.batch_size},
                   {"checkpoint_every", cfg.schedule.checkpoint_every},
                   {"log_every", cfg.schedule.log_every},
                   {"m_policy", cfg.schedule.m_policy}};
  j["out_dir"] = cfg.out_dir;
  return j.dump(2);
}

}  // namespace lane
