#include "hesim/netcompile.hpp"

#include <random>
#include <sstream>
#include <string>
#include <utility>

#include "hesim/errors.hpp"
#include "hesim/matvec.hpp"

namespace hesim {

namespace {

bool is_linear(LayerKind k) {
  return k == LayerKind::Conv || k == LayerKind::SubConv ||
         k == LayerKind::AvgPool || k == LayerKind::Flatten ||
         k == LayerKind::Dense;
}

bool is_standalone_convpack(const LayerSpec& l) {
  return l.kind == LayerKind::Conv && l.policy &&
         *l.policy == KernelPolicy::ConvPack;
}

struct ShapeState {
  Eigen::Index c = 0, d = 0;
  bool flat = false;
  Eigen::Index flat_len = 0;

  Eigen::Index size() const { return flat ? flat_len : c * d * d; }
};

ShapeState apply_layer(const ShapeState& s, const LayerSpec& l,
                       const std::string& where) {
  ShapeState out = s;
  switch (l.kind) {
    case LayerKind::Conv:
    case LayerKind::SubConv: {
      if (s.flat) throw ShapeError(where + ": convolution after flatten");
      if (l.kind == LayerKind::SubConv &&
          (s.c % l.groups != 0 || l.out % l.groups != 0)) {
        throw ShapeError(where + ": channels not divisible into " +
                         std::to_string(l.groups) + " groups");
      }
      out.c = l.out;
      out.d = (s.d - l.k) / l.s + 1;
      break;
    }
    case LayerKind::AvgPool:
      if (s.flat) throw ShapeError(where + ": pooling after flatten");
      out.d = (s.d - l.k) / l.s + 1;
      break;
    case LayerKind::Square:
      break;
    case LayerKind::Flatten:
      out.flat = true;
      out.flat_len = s.size();
      break;
    case LayerKind::Dense:
      out.flat = true;
      out.flat_len = l.out;
      break;
  }
  return out;
}

// Group count the next linear stage will consume its input in; merges
// inserted ahead of a Square target this partition.
Eigen::Index lookahead_groups(const ModelSpec& model, std::size_t from) {
  for (std::size_t j = from; j < model.layers.size(); ++j) {
    const LayerSpec& l = model.layers[j];
    if (l.kind == LayerKind::Square) continue;
    if (is_standalone_convpack(l)) return 1;
    if (l.kind == LayerKind::SubConv) return l.groups;
    if (is_linear(l.kind)) {
      // scan the whole run for a subconv
      for (std::size_t r = j; r < model.layers.size() &&
                              is_linear(model.layers[r].kind) &&
                              !is_standalone_convpack(model.layers[r]);
           ++r) {
        if (model.layers[r].kind == LayerKind::SubConv)
          return model.layers[r].groups;
      }
      return 1;
    }
  }
  return 1;
}

std::string run_label(const ModelSpec& model, const Stage& st,
                      std::size_t fallback_id) {
  std::string out;
  for (std::size_t idx : st.layer_idx) {
    const std::string& l = model.layers[idx].label;
    if (l.empty()) continue;
    if (!out.empty()) out += "-";
    out += l;
  }
  if (out.empty()) out = "Linear" + std::to_string(fallback_id);
  return out;
}

}  // namespace

LoweredProgram lower(const ModelSpec& model) {
  if (model.layers.empty()) throw ShapeError("model has no layers");
  if (!is_power_of_two(model.n_slots)) {
    throw ShapeError("n_slots must be a power of two");
  }
  LoweredProgram prog{model, {}};
  ShapeState shape{model.in_c, model.in_d, false, 0};

  std::size_t idx = 0;
  int flat_n = 0, square_n = 0, linear_n = 0;
  bool maps_layout = false;  // per-feature-map ciphertexts needing a merge

  if (model.layers[0].kind == LayerKind::Conv &&
      (!model.layers[0].policy ||
       *model.layers[0].policy == KernelPolicy::ConvPack)) {
    Stage st{StageKind::ConvPack,
             model.layers[0].label.empty() ? "Conv1" : model.layers[0].label,
             {0}};
    const ShapeState next = apply_layer(shape, model.layers[0], st.label);
    if (next.d * next.d > model.n_slots) {
      throw CapacityError(st.label + ": d_out^2 = " +
                          std::to_string(next.d * next.d) + " > n_slots = " +
                          std::to_string(model.n_slots));
    }
    prog.stages.push_back(std::move(st));
    shape = next;
    maps_layout = true;
    idx = 1;
  }

  while (idx < model.layers.size()) {
    const LayerSpec& l = model.layers[idx];
    if (l.kind == LayerKind::Square) {
      if (maps_layout) {
        Stage merge{StageKind::Merge, "Flat" + std::to_string(++flat_n), {}};
        merge.groups = lookahead_groups(model, idx + 1);
        if (shape.c % merge.groups != 0) {
          throw ShapeError(merge.label + ": " + std::to_string(shape.c) +
                           " maps not divisible into " +
                           std::to_string(merge.groups) + " groups");
        }
        if ((shape.c / merge.groups) * shape.d * shape.d > model.n_slots) {
          throw CapacityError(merge.label + ": group footprint " +
                              std::to_string((shape.c / merge.groups) *
                                             shape.d * shape.d) +
                              " > n_slots = " +
                              std::to_string(model.n_slots));
        }
        prog.stages.push_back(std::move(merge));
        maps_layout = false;
      }
      prog.stages.push_back(
          {StageKind::Square, "Square" + std::to_string(++square_n), {idx}});
      ++idx;
      continue;
    }
    if (!is_linear(l.kind)) {
      throw ShapeError("unsupported layer kind at index " +
                       std::to_string(idx));
    }
    if (is_standalone_convpack(l)) {
      Stage st{StageKind::RepackConv,
               l.label.empty() ? "Conv" + std::to_string(idx) : l.label,
               {idx}};
      prog.stages.push_back(st);
      shape = apply_layer(shape, l, st.label);
      maps_layout = true;
      ++idx;
      continue;
    }
    // maximal fused linear run
    Stage st{StageKind::Linear, "", {}};
    st.policy = model.default_policy;
    std::size_t j = idx;
    for (; j < model.layers.size() && is_linear(model.layers[j].kind) &&
           !is_standalone_convpack(model.layers[j]);
         ++j) {
      st.layer_idx.push_back(j);
      const LayerSpec& lj = model.layers[j];
      if (lj.kind == LayerKind::SubConv) st.groups = lj.groups;
      if (lj.policy) st.policy = *lj.policy;
    }
    st.label = run_label(model, st, ++linear_n);
    if (st.groups > 1 && st.policy != KernelPolicy::HS) {
      throw ShapeError(st.label + ": grouped stages require the HS kernel");
    }
    if (maps_layout) {
      Stage merge{StageKind::Merge, "Flat" + std::to_string(++flat_n), {}};
      merge.groups = st.groups;
      prog.stages.push_back(std::move(merge));
      maps_layout = false;
    }
    ShapeState run_shape = shape;
    for (std::size_t r : st.layer_idx) {
      run_shape = apply_layer(run_shape, model.layers[r], st.label);
    }
    const Eigen::Index m = run_shape.size(), n = shape.size();
    if (m > model.n_slots || n > model.n_slots) {
      throw CapacityError(st.label + ": fused " + std::to_string(m) + "x" +
                          std::to_string(n) + " exceeds n_slots = " +
                          std::to_string(model.n_slots));
    }
    prog.stages.push_back(std::move(st));
    shape = run_shape;
    idx = j;
  }
  return prog;
}

namespace {

// Fused affine map (M, b) of one linear run restricted to one channel
// group.  Composition is done in sparse form; the result is densified only
// for diagonal extraction.
struct AffineMap {
  SparseMat M;
  Eigen::VectorXd b;
};

AffineMap compose_run(const ModelSpec& model, const ModelWeights& weights,
                      const std::vector<std::size_t>& idxs, Eigen::Index group,
                      Eigen::Index n_groups, ShapeState shape) {
  shape.c /= n_groups;
  AffineMap acc;
  bool first = true;
  auto fold = [&](const SparseMat& M, const Eigen::VectorXd& b) {
    if (first) {
      acc.M = M;
      acc.b = b;
      first = false;
    } else {
      acc.M = (M * acc.M).eval();
      acc.b = M * acc.b + b;
    }
  };
  for (std::size_t idx : idxs) {
    const LayerSpec& l = model.layers[idx];
    const LayerWeights& w = weights.layers[idx];
    switch (l.kind) {
      case LayerKind::Conv:
      case LayerKind::SubConv: {
        const FilterBank& f = l.kind == LayerKind::SubConv
                                  ? w.group_filters[group]
                                  : w.filters;
        ConvShape cs{shape.d, shape.c, l.k, l.s, f.c_out};
        fold(conv_to_matrix(cs, f), conv_bias_vector(cs, f));
        shape.c = f.c_out;
        shape.d = cs.d_out();
        break;
      }
      case LayerKind::AvgPool: {
        fold(pool_to_matrix(shape.c, shape.d, l.k, l.s),
             Eigen::VectorXd::Zero(shape.c * ((shape.d - l.k) / l.s + 1) *
                                   ((shape.d - l.k) / l.s + 1)));
        shape.d = (shape.d - l.k) / l.s + 1;
        break;
      }
      case LayerKind::Flatten:
        shape.flat = true;
        shape.flat_len = shape.c * shape.d * shape.d;
        break;
      case LayerKind::Dense:
        fold(w.dense_w.sparseView(), w.dense_b);
        shape.flat = true;
        shape.flat_len = l.out;
        break;
      default:
        throw ShapeError("non-linear layer inside a fused run");
    }
  }
  if (first) throw ShapeError("empty linear run");
  return acc;
}

struct ExecState {
  // Maps layout: one ciphertext per feature map.  Grouped layout: one
  // dense ciphertext per channel group.
  std::vector<SlotVector> cts;
  bool maps = false;
  ShapeState shape;
  std::vector<Eigen::Index> widths;  // valid slots per grouped ciphertext
};

}  // namespace

ExecResult execute(const LoweredProgram& program, const ModelWeights& weights,
                   const Tensor3& input, MeterContext& ctx) {
  const ModelSpec& model = program.model;
  const Eigen::Index N = model.n_slots;
  if (weights.layers.size() != model.layers.size()) {
    throw ShapeError("weights do not match model layer count");
  }
  if (input.c != model.in_c || input.h != model.in_d ||
      input.w != model.in_d) {
    throw ShapeError("input tensor does not match model input shape");
  }

  ExecState st;
  st.shape = {model.in_c, model.in_d, false, 0};
  bool seeded = false;

  for (const Stage& stage : program.stages) {
    ctx.begin_stage(stage.label);
    if (!seeded && stage.kind != StageKind::ConvPack) {
      // No first-layer convolution packing: the client encrypts the
      // flattened input as one dense ciphertext.
      if (st.shape.size() > N) {
        throw CapacityError("input of " + std::to_string(st.shape.size()) +
                            " values exceeds n_slots");
      }
      st.cts = {pack(input.data, N, Kind::Ciphertext)};
      st.widths = {st.shape.size()};
      seeded = true;
    }
    switch (stage.kind) {
      case StageKind::ConvPack: {
        const LayerSpec& l = model.layers[stage.layer_idx[0]];
        ConvShape cs{st.shape.d, st.shape.c, l.k, l.s, l.out};
        auto taps = conv_pack(input, cs, N);
        st.cts = conv_packed_forward(taps, weights.layers[stage.layer_idx[0]].filters,
                                     cs, ctx);
        st.maps = true;
        st.shape = apply_layer(st.shape, l, stage.label);
        seeded = true;
        break;
      }
      case StageKind::Merge: {
        const Eigen::Index G = stage.groups;
        const Eigen::Index per = st.shape.c / G;
        const Eigen::Index w = st.shape.d * st.shape.d;
        std::vector<SlotVector> groups;
        groups.reserve(G);
        for (Eigen::Index g = 0; g < G; ++g) {
          std::vector<SlotVector> slice(st.cts.begin() + g * per,
                                        st.cts.begin() + (g + 1) * per);
          groups.push_back(merge_maps(slice, w, ctx));
        }
        st.cts = std::move(groups);
        st.maps = false;
        st.widths.assign(G, per * w);
        break;
      }
      case StageKind::Square: {
        for (auto& ct : st.cts) ct = square_layer(ct, ctx);
        break;
      }
      case StageKind::RepackConv: {
        const LayerSpec& l = model.layers[stage.layer_idx[0]];
        if (l.k != 1) {
          throw ShapeError(stage.label +
                           ": only 1x1 convolutions support the packed "
                           "rotation lowering");
        }
        const Eigen::Index w = st.shape.d * st.shape.d;
        std::vector<SlotVector> taps;
        taps.reserve(st.shape.c);
        if (st.maps) {
          taps = st.cts;
        } else {
          const Eigen::Index G = static_cast<Eigen::Index>(st.cts.size());
          const Eigen::Index per = st.shape.c / G;
          for (Eigen::Index g = 0; g < G; ++g) {
            for (Eigen::Index j = 0; j < per; ++j) {
              taps.push_back(rotate_left(st.cts[g], j * w, ctx));
            }
          }
        }
        ConvShape cs{st.shape.d, st.shape.c, 1, 1, l.out};
        st.cts = conv_packed_forward(
            taps, weights.layers[stage.layer_idx[0]].filters, cs, ctx);
        st.maps = true;
        st.shape = apply_layer(st.shape, l, stage.label);
        break;
      }
      case StageKind::Linear: {
        const Eigen::Index G = stage.groups;
        if (static_cast<Eigen::Index>(st.cts.size()) != G) {
          throw LayoutError(stage.label + ": expected " + std::to_string(G) +
                            " input ciphertexts, have " +
                            std::to_string(st.cts.size()));
        }
        std::vector<SlotVector> outs;
        std::vector<Eigen::Index> widths;
        for (Eigen::Index g = 0; g < G; ++g) {
          AffineMap aff = compose_run(model, weights, stage.layer_idx, g, G,
                                      st.shape);
          const Eigen::MatrixXd M = Eigen::MatrixXd(aff.M);
          SlotVector out = zeros(N, Kind::Ciphertext);
          try {
            switch (stage.policy) {
              case KernelPolicy::HS:
                out = hs_matvec(M, st.cts[g], ctx);
                break;
              case KernelPolicy::LoLaDense: {
                auto rows = lola_dense_matvec(M, st.cts[g], ctx);
                out = merge_maps(rows, 1, ctx);
                break;
              }
              case KernelPolicy::LoLaStacked: {
                auto res = lola_stacked_matvec(M, st.cts[g], ctx);
                // De-interleave at the value level; the published
                // accounting carries no cost for consuming the permuted
                // layout.
                Eigen::VectorXd v = Eigen::VectorXd::Zero(N);
                for (Eigen::Index r = 0; r < M.rows(); ++r) {
                  v[r] = res.ct[res.slot_of_row[r]];
                }
                out = SlotVector(std::move(v), Kind::Ciphertext);
                break;
              }
              case KernelPolicy::ConvPack:
                throw ShapeError(stage.label +
                                 ": ConvPack is not a matrix-vector kernel");
            }
          } catch (const CapacityError& e) {
            throw CapacityError(stage.label + ": " + e.what());
          }
          out = add(out, pack(aff.b, N, Kind::Plaintext), ctx);
          outs.push_back(out.masked_prefix(M.rows()));
          widths.push_back(M.rows());
        }
        st.cts = std::move(outs);
        st.widths = std::move(widths);
        st.maps = false;
        for (std::size_t r : stage.layer_idx) {
          st.shape = apply_layer(st.shape, model.layers[r], stage.label);
        }
        break;
      }
    }
  }

  if (st.cts.size() != 1) {
    throw LayoutError("program must end in a single output ciphertext");
  }
  ExecResult res;
  res.logits = st.cts[0].slots().head(st.shape.size());
  res.report.rows = ctx.stages();
  res.report.total = ctx.tally;
  return res;
}

Eigen::VectorXd ref_forward(const ModelSpec& model, const ModelWeights& weights,
                            const Tensor3& input) {
  Tensor3 t = input;
  Eigen::VectorXd flat;
  bool is_flat = false;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    const LayerWeights& w = weights.layers[i];
    switch (l.kind) {
      case LayerKind::Conv:
        t = ref_conv(t, w.filters, l.s);
        break;
      case LayerKind::SubConv: {
        const Eigen::Index per_in = t.c / l.groups;
        Tensor3 out;
        std::vector<Tensor3> parts;
        for (Eigen::Index g = 0; g < l.groups; ++g) {
          Tensor3 slice(per_in, t.h, t.w);
          slice.data = t.data.segment(g * per_in * t.h * t.w,
                                      per_in * t.h * t.w);
          parts.push_back(ref_conv(slice, w.group_filters[g], l.s));
        }
        out = Tensor3(l.out, parts[0].h, parts[0].w);
        Eigen::Index off = 0;
        for (const Tensor3& p : parts) {
          out.data.segment(off, p.data.size()) = p.data;
          off += p.data.size();
        }
        t = out;
        break;
      }
      case LayerKind::AvgPool:
        t = ref_avgpool(t, l.k, l.s);
        break;
      case LayerKind::Square:
        if (is_flat) {
          flat = flat.cwiseProduct(flat);
        } else {
          t = ref_square(t);
        }
        break;
      case LayerKind::Flatten:
        flat = t.data;
        is_flat = true;
        break;
      case LayerKind::Dense:
        if (!is_flat) {
          flat = t.data;
          is_flat = true;
        }
        flat = ref_dense(flat, w.dense_w, w.dense_b);
        break;
    }
  }
  return is_flat ? flat : t.data;
}

namespace {

ShapeState shape_before_layer(const ModelSpec& model, std::size_t idx) {
  ShapeState s{model.in_c, model.in_d, false, 0};
  for (std::size_t i = 0; i < idx; ++i) {
    s = apply_layer(s, model.layers[i], "shape inference");
  }
  return s;
}

FilterBank random_filters(Eigen::Index c_out, Eigen::Index c_in,
                          Eigen::Index k, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  FilterBank f{c_out, c_in, k, Eigen::VectorXd(c_out * c_in * k * k),
               Eigen::VectorXd(c_out)};
  const double scale = 1.0 / std::sqrt(static_cast<double>(c_in * k * k));
  for (Eigen::Index i = 0; i < f.weights.size(); ++i)
    f.weights[i] = dist(rng) * scale;
  for (Eigen::Index i = 0; i < c_out; ++i) f.bias[i] = dist(rng) * 0.1;
  return f;
}

}  // namespace

ModelWeights random_weights(const ModelSpec& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  ModelWeights out;
  out.layers.resize(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    const ShapeState s = shape_before_layer(model, i);
    if (l.kind == LayerKind::Conv) {
      out.layers[i].filters = random_filters(l.out, s.c, l.k, rng);
    } else if (l.kind == LayerKind::SubConv) {
      for (Eigen::Index g = 0; g < l.groups; ++g) {
        out.layers[i].group_filters.push_back(
            random_filters(l.out / l.groups, s.c / l.groups, l.k, rng));
      }
    } else if (l.kind == LayerKind::Dense) {
      const Eigen::Index n = s.size();
      const double scale = 1.0 / std::sqrt(static_cast<double>(n));
      Eigen::MatrixXd W(l.out, n);
      for (Eigen::Index r = 0; r < l.out; ++r)
        for (Eigen::Index c = 0; c < n; ++c) W(r, c) = dist(rng) * scale;
      Eigen::VectorXd b(l.out);
      for (Eigen::Index r = 0; r < l.out; ++r) b[r] = dist(rng) * 0.1;
      out.layers[i].dense_w = std::move(W);
      out.layers[i].dense_b = std::move(b);
    }
  }
  return out;
}

Tensor3 random_input(const ModelSpec& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> dist(0.0, 1.0);
  Tensor3 t(model.in_c, model.in_d, model.in_d);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data[i] = dist(rng);
  return t;
}

ModelSpec builtin_cryptonets_hs() {
  ModelSpec m;
  m.name = "cryptonets-hs";
  m.in_c = 1;
  m.in_d = 29;  // 28x28 input padded client-side
  m.n_slots = 8192;
  m.layers = {
      {LayerKind::Conv, 5, 2, 5, 1, {}, "Conv1"},
      {LayerKind::Square},
      {LayerKind::AvgPool, 2, 2},
      {LayerKind::Conv, 5, 1, 50, 1, {}, "Conv2"},
      {LayerKind::AvgPool, 2, 2},
      {LayerKind::Flatten},
      {LayerKind::Dense, 0, 1, 100, 1, {}, "Dense1"},
      {LayerKind::Square},
      {LayerKind::Dense, 0, 1, 10, 1, {}, "Dense2"},
  };
  return m;
}

ModelSpec builtin_me() {
  ModelSpec m;
  m.name = "me";
  m.in_c = 1;
  m.in_d = 30;  // 28x28 input padded client-side
  m.n_slots = 8192;
  m.layers = {
      {LayerKind::Conv, 3, 1, 5, 1, {}, "Conv1"},
      {LayerKind::Square},
      {LayerKind::AvgPool, 3, 2},
      {LayerKind::Conv, 3, 1, 50, 1, {}, "Conv2"},
      {LayerKind::AvgPool, 3, 2},
      {LayerKind::Flatten},
      {LayerKind::Dense, 0, 1, 32, 1, {}, "Dense1"},
      {LayerKind::Square},
      {LayerKind::Dense, 0, 1, 10, 1, {}, "Dense2"},
  };
  return m;
}

ModelSpec builtin_ce() {
  ModelSpec m;
  m.name = "ce";
  m.in_c = 3;
  m.in_d = 32;
  m.n_slots = 16384;
  m.layers = {
      {LayerKind::Conv, 3, 1, 18, 1, {}, "Conv1"},
      {LayerKind::Square},
      {LayerKind::AvgPool, 2, 2, 0, 1, {}, "Pool1"},
      {LayerKind::SubConv, 3, 1, 15, 3, {}, "Conv2"},
      {LayerKind::Conv, 1, 1, 64, 1, KernelPolicy::ConvPack, "Conv3"},
      {LayerKind::Square},
      {LayerKind::AvgPool, 2, 2, 0, 1, {}, "Pool2"},
      {LayerKind::Conv, 3, 1, 64, 1, {}, ""},
      {LayerKind::Flatten},
      {LayerKind::Dense, 0, 1, 256, 1, {}, "Dense1"},
      {LayerKind::Square},
      {LayerKind::Dense, 0, 1, 10, 1, {}, "Dense2"},
  };
  return m;
}

std::optional<ModelSpec> builtin_model(const std::string& name) {
  if (name == "cryptonets-hs") return builtin_cryptonets_hs();
  if (name == "me") return builtin_me();
  if (name == "ce") return builtin_ce();
  return std::nullopt;
}

OpReport lola_mnist_reference() {
  OpReport r;
  auto row = [](std::int64_t add_pc, std::int64_t add_cc, std::int64_t mul_pc,
                std::int64_t mul_cc, std::int64_t rot) {
    return OpTally{add_pc, add_cc, mul_pc, mul_cc, rot};
  };
  r.rows = {
      {"Conv1", row(5, 120, 125, 0, 0)},
      {"Flat1", row(0, 4, 0, 0, 4)},
      {"Square1", row(0, 0, 0, 1, 0)},
      {"Conv2-Dense1", row(0, 246, 13, 0, 246)},
      {"Square2", row(0, 0, 0, 1, 0)},
      {"Dense2", row(0, 139, 10, 0, 130)},
  };
  r.total = row(5, 509, 148, 2, 380);
  return r;
}

std::string OpReport::to_csv() const {
  std::ostringstream os;
  os << "layer,total,add_pc,add_cc,mul_pc,mul_cc,rot\n";
  auto line = [&os](const std::string& label, const OpTally& t) {
    os << label << "," << t.total() << "," << t.add_pc << "," << t.add_cc
       << "," << t.mul_pc << "," << t.mul_cc << "," << t.rot << "\n";
  };
  for (const auto& [label, tally] : rows) line(label, tally);
  line("Total", total);
  return os.str();
}

}  // namespace hesim
