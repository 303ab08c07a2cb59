#include "sclab/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "sclab/errors.hpp"

namespace sclab {

namespace {

constexpr char kMagic[] = "SCKPT1";
constexpr std::size_t kMagicLen = 6;

nlohmann::json head_mode_json(const HeadMode& h) {
  nlohmann::json j = {{"mode", h.name()}};
  return j;
}

HeadMode head_mode_from_json(const nlohmann::json& j) {
  return HeadMode::parse(j.at("mode").get<std::string>());
}

}  // namespace

const Matrix& ArrayStore::get(const std::string& name) const {
  for (const auto& [n, m] : arrays) {
    if (n == name) return m;
  }
  throw ParseError("ArrayStore: missing array '" + name + "'");
}

bool ArrayStore::has(const std::string& name) const {
  for (const auto& [n, m] : arrays) {
    if (n == name) return true;
  }
  return false;
}

void save_array_store(const std::string& path, const ArrayStore& store) {
  nlohmann::json dir = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, m] : store.arrays) {
    dir.push_back({{"name", name}, {"rows", m.rows}, {"cols", m.cols}, {"offset", offset}});
    offset += m.size() * 4;
  }
  nlohmann::json header = {{"kind", store.kind},
                           {"training_fraction", store.training_fraction},
                           {"config", store.config},
                           {"arrays", dir}};

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_array_store: cannot open " + path);
  out.write(kMagic, kMagicLen);
  const std::string h = header.dump();
  out.write(h.data(), std::streamsize(h.size()));
  out.put('\n');
  for (const auto& [name, m] : store.arrays) {
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(m.data.data()), std::streamsize(m.size() * 4));
  }
  if (!out) throw IoError("save_array_store: write failed for " + path);
}

ArrayStore load_array_store(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_array_store: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < kMagicLen || std::memcmp(buf.data(), kMagic, kMagicLen) != 0) {
    throw ParseError("load_array_store: bad magic in " + path + " (expected SCKPT1)");
  }
  const std::size_t nl = buf.find('\n', kMagicLen);
  if (nl == std::string::npos) throw ParseError("load_array_store: missing header terminator");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(buf.substr(kMagicLen, nl - kMagicLen));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("load_array_store: malformed header: ") + e.what());
  }

  ArrayStore store;
  store.kind = header.value("kind", "");
  store.training_fraction = header.value("training_fraction", 1.0);
  store.config = header.value("config", nlohmann::json::object());

  const std::size_t payload_start = nl + 1;
  for (const auto& entry : header.at("arrays")) {
    const std::string name = entry.at("name").get<std::string>();
    const int rows = entry.at("rows").get<int>();
    const int cols = entry.at("cols").get<int>();
    const std::size_t offset = entry.at("offset").get<std::size_t>();
    const std::size_t bytes = std::size_t(rows) * std::size_t(cols) * 4;
    if (payload_start + offset + bytes > buf.size()) {
      throw ParseError("load_array_store: array '" + name + "' extends past end of file");
    }
    Matrix m(rows, cols);
    std::memcpy(m.data.data(), buf.data() + payload_start + offset, bytes);
    m.validate_finite();
    store.arrays.emplace_back(name, std::move(m));
  }
  return store;
}

namespace {

Matrix vec_to_mat(const std::vector<float>& v) {
  Matrix m(1, int(v.size()));
  m.data = v;
  return m;
}

void add_tower(ArrayStore& store, const std::string& prefix, const TowerParams& t) {
  for (std::size_t i = 0; i < t.layers.size(); ++i) {
    store.add(prefix + ".layer" + std::to_string(i) + ".weight", t.layers[i].weight);
    store.add(prefix + ".layer" + std::to_string(i) + ".bias", vec_to_mat(t.layers[i].bias));
  }
  store.add(prefix + ".proj.weight", t.proj_weight);
  store.add(prefix + ".proj.bias", vec_to_mat(t.proj_bias));
}

TowerParams tower_from_store(const ArrayStore& store, const std::string& prefix, HeadMode head) {
  TowerParams t;
  t.head_mode = head;
  for (std::size_t i = 0;; ++i) {
    const std::string wname = prefix + ".layer" + std::to_string(i) + ".weight";
    if (!store.has(wname)) break;
    DenseLayerT<float> layer;
    layer.weight = store.get(wname);
    layer.bias = store.get(prefix + ".layer" + std::to_string(i) + ".bias").data;
    t.layers.push_back(std::move(layer));
  }
  t.proj_weight = store.get(prefix + ".proj.weight");
  t.proj_bias = store.get(prefix + ".proj.bias").data;
  return t;
}

}  // namespace

void save_model_checkpoint(const std::string& path, const ModelParams& params,
                           const ModelConfig& cfg, double training_fraction) {
  ArrayStore store;
  store.kind = "model";
  store.training_fraction = training_fraction;
  store.config = {{"image_input_dim", cfg.image_input_dim},
                  {"text_input_dim", cfg.text_input_dim},
                  {"hidden_dims", cfg.hidden_dims},
                  {"expansion_factor", cfg.expansion_factor},
                  {"head_mode", head_mode_json(cfg.head_mode)},
                  {"logit_scale_cap", cfg.logit_scale_cap}};
  add_tower(store, "image_tower", params.image_tower);
  add_tower(store, "text_tower", params.text_tower);
  Matrix scalars(1, 2);
  scalars(0, 0) = params.log_logit_scale;
  scalars(0, 1) = params.logit_scale_cap;
  store.add("scalars", std::move(scalars));
  save_array_store(path, store);
}

LoadedModel load_model_checkpoint(const std::string& path) {
  const ArrayStore store = load_array_store(path);
  if (store.kind != "model") {
    throw ParseError("load_model_checkpoint: '" + path + "' holds kind '" + store.kind + "', not a model");
  }
  LoadedModel lm;
  lm.training_fraction = store.training_fraction;
  const auto& cfg = store.config;
  lm.config.image_input_dim = cfg.at("image_input_dim").get<int>();
  lm.config.text_input_dim = cfg.at("text_input_dim").get<int>();
  lm.config.hidden_dims = cfg.at("hidden_dims").get<std::vector<int>>();
  lm.config.expansion_factor = cfg.at("expansion_factor").get<int>();
  lm.config.head_mode = head_mode_from_json(cfg.at("head_mode"));
  lm.config.logit_scale_cap = cfg.at("logit_scale_cap").get<float>();

  lm.params.image_tower = tower_from_store(store, "image_tower", lm.config.head_mode);
  lm.params.text_tower = tower_from_store(store, "text_tower", lm.config.head_mode);
  const Matrix& scalars = store.get("scalars");
  lm.params.log_logit_scale = scalars(0, 0);
  lm.params.logit_scale_cap = scalars(0, 1);
  return lm;
}

void save_world(const std::string& path, const SyntheticWorld& world) {
  ArrayStore store;
  store.kind = "world";
  nlohmann::json vocab = nlohmann::json::array();
  for (const auto& [word, cid] : world.vocabulary) vocab.push_back({{"word", word}, {"concept", cid}});
  store.config = {{"n_concepts", world.n_concepts},
                  {"latent_dim", world.latent_dim},
                  {"image_input_dim", world.image_input_dim},
                  {"text_input_dim", world.text_input_dim},
                  {"noise_sigma", world.noise_sigma},
                  {"seed", world.seed},
                  {"vocabulary", vocab},
                  {"class_labels", world.class_labels}};
  store.add("concept_vectors", world.concept_vectors);
  store.add("image_map", world.image_map);
  store.add("text_map", world.text_map);
  store.add("word_latents", world.word_latents);
  save_array_store(path, store);
}

SyntheticWorld load_world(const std::string& path) {
  const ArrayStore store = load_array_store(path);
  if (store.kind != "world") {
    throw ParseError("load_world: '" + path + "' holds kind '" + store.kind + "', not a world");
  }
  SyntheticWorld w;
  const auto& cfg = store.config;
  w.n_concepts = cfg.at("n_concepts").get<int>();
  w.latent_dim = cfg.at("latent_dim").get<int>();
  w.image_input_dim = cfg.at("image_input_dim").get<int>();
  w.text_input_dim = cfg.at("text_input_dim").get<int>();
  w.noise_sigma = cfg.at("noise_sigma").get<float>();
  w.seed = cfg.at("seed").get<uint64_t>();
  for (const auto& entry : cfg.at("vocabulary")) {
    w.vocabulary.emplace_back(entry.at("word").get<std::string>(), entry.at("concept").get<int>());
  }
  w.class_labels = cfg.at("class_labels").get<std::vector<int>>();
  w.concept_vectors = store.get("concept_vectors");
  w.image_map = store.get("image_map");
  w.text_map = store.get("text_map");
  w.word_latents = store.get("word_latents");
  return w;
}

}  // namespace sclab
