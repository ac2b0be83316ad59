#include "hesim/modelio.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hesim/errors.hpp"

namespace hesim {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw IoError("unknown field \"" + key + "\" in " + where);
    }
  }
}

LayerKind parse_kind(const std::string& s) {
  if (s == "conv") return LayerKind::Conv;
  if (s == "subconv") return LayerKind::SubConv;
  if (s == "avgpool") return LayerKind::AvgPool;
  if (s == "square") return LayerKind::Square;
  if (s == "flatten") return LayerKind::Flatten;
  if (s == "dense") return LayerKind::Dense;
  throw IoError("unknown layer kind \"" + s + "\"");
}

KernelPolicy parse_policy(const std::string& s) {
  if (s == "convpack") return KernelPolicy::ConvPack;
  if (s == "hs") return KernelPolicy::HS;
  if (s == "lola-dense") return KernelPolicy::LoLaDense;
  if (s == "lola-stacked") return KernelPolicy::LoLaStacked;
  throw IoError("unknown kernel policy \"" + s + "\"");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<double> read_f32(std::ifstream& in, std::size_t count,
                             const std::string& path) {
  std::vector<float> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float)) {
    throw IoError(path + ": truncated float32 stream");
  }
  return {raw.begin(), raw.end()};
}

void write_f32(std::ofstream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const float f = static_cast<float>(v[i]);
    out.write(reinterpret_cast<const char*>(&f), sizeof(float));
  }
}

FilterBank read_bank(std::ifstream& in, Eigen::Index c_out, Eigen::Index c_in,
                     Eigen::Index k, const std::string& path) {
  FilterBank f{c_out, c_in, k, Eigen::VectorXd(c_out * c_in * k * k),
               Eigen::VectorXd(c_out)};
  auto w = read_f32(in, static_cast<std::size_t>(f.weights.size()), path);
  for (Eigen::Index i = 0; i < f.weights.size(); ++i) f.weights[i] = w[i];
  auto b = read_f32(in, static_cast<std::size_t>(c_out), path);
  for (Eigen::Index i = 0; i < c_out; ++i) f.bias[i] = b[i];
  return f;
}

struct Shape {
  Eigen::Index c, d;
};

Shape shape_before(const ModelSpec& model, std::size_t idx) {
  Shape s{model.in_c, model.in_d};
  for (std::size_t i = 0; i < idx; ++i) {
    const LayerSpec& l = model.layers[i];
    if (l.kind == LayerKind::Conv || l.kind == LayerKind::SubConv) {
      s.c = l.out;
      s.d = (s.d - l.k) / l.s + 1;
    } else if (l.kind == LayerKind::AvgPool) {
      s.d = (s.d - l.k) / l.s + 1;
    } else if (l.kind == LayerKind::Dense) {
      s.c = l.out;
      s.d = 1;
    }
  }
  return s;
}

}  // namespace

ModelSpec parse_model_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("model JSON parse error: ") + e.what());
  }
  try {
    reject_unknown(doc, {"name", "input", "n_slots", "layers"}, "model");
    ModelSpec m;
    m.name = doc.at("name").get<std::string>();
    const auto& input = doc.at("input");
    if (!input.is_array() || input.size() != 3 ||
        input[1].get<Eigen::Index>() != input[2].get<Eigen::Index>()) {
      throw IoError("input must be [channels, d, d]");
    }
    m.in_c = input[0].get<Eigen::Index>();
    m.in_d = input[1].get<Eigen::Index>();
    m.n_slots = doc.at("n_slots").get<Eigen::Index>();
    for (const auto& jl : doc.at("layers")) {
      reject_unknown(jl,
                     {"kind", "k", "s", "out_channels", "units", "groups",
                      "policy", "label"},
                     "layer");
      LayerSpec l;
      l.kind = parse_kind(jl.at("kind").get<std::string>());
      l.k = jl.value("k", Eigen::Index{0});
      l.s = jl.value("s", Eigen::Index{1});
      if (jl.contains("out_channels")) l.out = jl["out_channels"].get<Eigen::Index>();
      if (jl.contains("units")) l.out = jl["units"].get<Eigen::Index>();
      l.groups = jl.value("groups", Eigen::Index{1});
      if (jl.contains("policy")) {
        l.policy = parse_policy(jl["policy"].get<std::string>());
      }
      l.label = jl.value("label", std::string{});
      m.layers.push_back(std::move(l));
    }
    return m;
  } catch (const json::exception& e) {
    throw IoError(std::string("model JSON: ") + e.what());
  }
}

ModelSpec load_model(const std::string& path) {
  return parse_model_json(read_file(path));
}

ModelSpec resolve_model(const std::string& name_or_path) {
  if (auto builtin = builtin_model(name_or_path)) return *builtin;
  namespace fs = std::filesystem;
  if (fs::exists(name_or_path)) return load_model(name_or_path);
  if (const char* dir = std::getenv("HECNN_MODEL_DIR")) {
    for (const auto& candidate :
         {fs::path(dir) / name_or_path,
          fs::path(dir) / (name_or_path + ".json")}) {
      if (fs::exists(candidate)) return load_model(candidate.string());
    }
  }
  throw IoError("model \"" + name_or_path +
                "\" is neither a builtin, a file, nor found under "
                "$HECNN_MODEL_DIR");
}

ModelWeights load_weights(const ModelSpec& model, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  ModelWeights out;
  out.layers.resize(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    const Shape s = shape_before(model, i);
    if (l.kind == LayerKind::Conv) {
      out.layers[i].filters = read_bank(in, l.out, s.c, l.k, path);
    } else if (l.kind == LayerKind::SubConv) {
      for (Eigen::Index g = 0; g < l.groups; ++g) {
        out.layers[i].group_filters.push_back(
            read_bank(in, l.out / l.groups, s.c / l.groups, l.k, path));
      }
    } else if (l.kind == LayerKind::Dense) {
      const Eigen::Index n = s.c * s.d * s.d;
      auto w = read_f32(in, static_cast<std::size_t>(l.out * n), path);
      Eigen::MatrixXd W(l.out, n);
      for (Eigen::Index r = 0; r < l.out; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
          W(r, c) = w[static_cast<std::size_t>(r * n + c)];
      auto b = read_f32(in, static_cast<std::size_t>(l.out), path);
      out.layers[i].dense_w = std::move(W);
      out.layers[i].dense_b =
          Eigen::Map<const Eigen::VectorXd>(b.data(), l.out);
    }
  }
  char extra;
  if (in.read(&extra, 1)) {
    throw IoError(path + ": trailing bytes after expected weights");
  }
  return out;
}

void save_weights(const ModelSpec& model, const ModelWeights& weights,
                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    const LayerWeights& w = weights.layers[i];
    if (l.kind == LayerKind::Conv) {
      write_f32(out, w.filters.weights);
      write_f32(out, w.filters.bias);
    } else if (l.kind == LayerKind::SubConv) {
      for (const FilterBank& f : w.group_filters) {
        write_f32(out, f.weights);
        write_f32(out, f.bias);
      }
    } else if (l.kind == LayerKind::Dense) {
      Eigen::VectorXd flat(w.dense_w.size());
      Eigen::Index p = 0;
      for (Eigen::Index r = 0; r < w.dense_w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.dense_w.cols(); ++c)
          flat[p++] = w.dense_w(r, c);
      write_f32(out, flat);
      write_f32(out, w.dense_b);
    }
  }
}

Tensor3 load_input(const ModelSpec& model, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  Tensor3 t(model.in_c, model.in_d, model.in_d);
  auto v = read_f32(in, static_cast<std::size_t>(t.data.size()), path);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data[i] = v[i];
  char extra;
  if (in.read(&extra, 1)) {
    throw IoError(path + ": trailing bytes after expected input");
  }
  return t;
}

void save_input(const Tensor3& input, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_f32(out, input.data);
}

}  // namespace hesim
