// Copyright 2026 The kgdial Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kgdial/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kgdial {

std::vector<std::string> ablation_names(const Ablation& a) {
  std::vector<std::string> names;
  if (a.no_entity_embedding) names.emplace_back("no-entity-emb");
  if (a.no_triple_embedding) names.emplace_back("no-triple-emb");
  if (a.no_type_embedding) names.emplace_back("no-type-emb");
  if (a.no_kg_mask) names.emplace_back("no-kg-mask");
  return names;
}

void apply_ablation_name(Ablation& a, const std::string& name) {
  if (name == "no-entity-emb") {
    a.no_entity_embedding = true;
  } else if (name == "no-triple-emb") {
    a.no_triple_embedding = true;
  } else if (name == "no-type-emb") {
    a.no_type_embedding = true;
  } else if (name == "no-kg-mask") {
    a.no_kg_mask = true;
  } else if (name == "seq2seq") {
    a.no_entity_embedding = a.no_triple_embedding = a.no_type_embedding = true;
  } else {
    throw std::invalid_argument("unknown ablation '" + name + "'");
  }
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw std::invalid_argument(std::string("model config: ") + name + " must be >= 1");
  };
  positive(d_model, "d_model");
  positive(n_heads, "n_heads");
  positive(n_layers, "n_layers");
  positive(d_ff, "d_ff");
  positive(vocab_size, "vocab_size");
  positive(max_positions, "max_positions");
  positive(max_entity_ids, "max_entity_ids");
  positive(max_triple_ids, "max_triple_ids");
  if (n_types != kNumTypes) throw std::invalid_argument("model config: n_types must be 3");
  if (d_model % n_heads != 0) {
    throw std::invalid_argument("model config: d_model must be divisible by n_heads");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("model config: dropout must lie in [0, 1)");
  }
}

// ---------------------------------------------------------------------------
// Parameters

template <typename T>
Parameters<T> Parameters<T>::zeros(const ModelConfig& cfg) {
  const int d = cfg.d_model;
  auto z = [](int r, int c) { return Matrix<T>::Zero(r, c).eval(); };
  Parameters p;
  p.token = z(cfg.vocab_size, d);
  p.position = z(cfg.max_positions, d);
  p.entity = z(cfg.max_entity_ids, d);
  p.triple = z(cfg.max_triple_ids, d);
  p.type = z(cfg.n_types, d);
  p.emb_ln_gain = z(1, d);
  p.emb_ln_bias = z(1, d);
  for (int l = 0; l < cfg.n_layers; ++l) {
    BlockParams<T> b;
    b.ln1_gain = z(1, d);
    b.ln1_bias = z(1, d);
    b.w_q = z(d, d);
    b.b_q = z(1, d);
    b.w_k = z(d, d);
    b.b_k = z(1, d);
    b.w_v = z(d, d);
    b.b_v = z(1, d);
    b.w_o = z(d, d);
    b.b_o = z(1, d);
    b.ln2_gain = z(1, d);
    b.ln2_bias = z(1, d);
    b.w_fc = z(d, cfg.d_ff);
    b.b_fc = z(1, cfg.d_ff);
    b.w_proj = z(cfg.d_ff, d);
    b.b_proj = z(1, d);
    p.blocks.push_back(std::move(b));
  }
  p.final_ln_gain = z(1, d);
  p.final_ln_bias = z(1, d);
  return p;
}

namespace {

template <typename P, typename Out>
void collect(P& p, Out& out) {
  out.emplace_back("embed.token", &p.token);
  out.emplace_back("embed.position", &p.position);
  out.emplace_back("embed.entity", &p.entity);
  out.emplace_back("embed.triple", &p.triple);
  out.emplace_back("embed.type", &p.type);
  out.emplace_back("embed.ln.gain", &p.emb_ln_gain);
  out.emplace_back("embed.ln.bias", &p.emb_ln_bias);
  for (std::size_t l = 0; l < p.blocks.size(); ++l) {
    auto& b = p.blocks[l];
    const std::string pre = "blocks." + std::to_string(l) + ".";
    out.emplace_back(pre + "ln1.gain", &b.ln1_gain);
    out.emplace_back(pre + "ln1.bias", &b.ln1_bias);
    out.emplace_back(pre + "attn.w_q", &b.w_q);
    out.emplace_back(pre + "attn.b_q", &b.b_q);
    out.emplace_back(pre + "attn.w_k", &b.w_k);
    out.emplace_back(pre + "attn.b_k", &b.b_k);
    out.emplace_back(pre + "attn.w_v", &b.w_v);
    out.emplace_back(pre + "attn.b_v", &b.b_v);
    out.emplace_back(pre + "attn.w_o", &b.w_o);
    out.emplace_back(pre + "attn.b_o", &b.b_o);
    out.emplace_back(pre + "ln2.gain", &b.ln2_gain);
    out.emplace_back(pre + "ln2.bias", &b.ln2_bias);
    out.emplace_back(pre + "ffn.w_fc", &b.w_fc);
    out.emplace_back(pre + "ffn.b_fc", &b.b_fc);
    out.emplace_back(pre + "ffn.w_proj", &b.w_proj);
    out.emplace_back(pre + "ffn.b_proj", &b.b_proj);
  }
  out.emplace_back("final_ln.gain", &p.final_ln_gain);
  out.emplace_back("final_ln.bias", &p.final_ln_bias);
}

}  // namespace

template <typename T>
std::vector<std::pair<std::string, Matrix<T>*>> Parameters<T>::named() {
  std::vector<std::pair<std::string, Matrix<T>*>> out;
  collect(*this, out);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const Matrix<T>*>> Parameters<T>::named() const {
  std::vector<std::pair<std::string, const Matrix<T>*>> out;
  collect(*this, out);
  return out;
}

template <typename T>
std::size_t Parameters<T>::count() const {
  std::size_t n = 0;
  for (const auto& [_, m] : named()) n += static_cast<std::size_t>(m->size());
  return n;
}

template <typename T>
void Parameters<T>::set_zero() {
  for (auto& [_, m] : named()) m->setZero();
}

template <typename T>
bool Parameters<T>::all_finite() const {
  for (const auto& [_, m] : named()) {
    if (!m->allFinite()) return false;
  }
  return true;
}

template <typename To, typename From>
Parameters<To> cast_parameters(const Parameters<From>& p) {
  Parameters<To> out;
  out.blocks.resize(p.blocks.size());
  auto dst = out.named();
  auto src = p.named();
  for (std::size_t i = 0; i < src.size(); ++i) *dst[i].second = src[i].second->template cast<To>();
  return out;
}

template Parameters<double> cast_parameters<double, float>(const Parameters<float>&);
template Parameters<float> cast_parameters<float, double>(const Parameters<double>&);
template Parameters<float> cast_parameters<float, float>(const Parameters<float>&);
template Parameters<double> cast_parameters<double, double>(const Parameters<double>&);

// ---------------------------------------------------------------------------
// Kernels

namespace {

constexpr double kLayerNormEps = 1e-5;

template <typename T>
using Column = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
struct NormCache {
  Matrix<T> xhat;
  Column<T> rstd;
};

template <typename T>
Matrix<T> layer_norm(const Matrix<T>& x, const Matrix<T>& gain, const Matrix<T>& bias,
                     NormCache<T>* cache) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Matrix<T> xhat(n, d);
  Column<T> rstd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mu = x.row(i).mean();
    auto centered = (x.row(i).array() - mu).eval();
    const T var = centered.square().mean();
    rstd(i) = T(1) / std::sqrt(var + T(kLayerNormEps));
    xhat.row(i) = centered * rstd(i);
  }
  Matrix<T> y = (xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

template <typename T>
Matrix<T> layer_norm_backward(const Matrix<T>& dy, const NormCache<T>& c, const Matrix<T>& gain,
                              Matrix<T>& dgain, Matrix<T>& dbias) {
  dgain += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  dbias += dy.colwise().sum();
  const Matrix<T> dxhat = dy.array().rowwise() * gain.row(0).array();
  Matrix<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const T m1 = dxhat.row(i).mean();
    const T m2 = (dxhat.row(i).array() * c.xhat.row(i).array()).mean();
    dx.row(i) = c.rstd(i) * (dxhat.row(i).array() - m1 - c.xhat.row(i).array() * m2);
  }
  return dx;
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

template <typename T>
Matrix<T> gelu(const Matrix<T>& f) {
  const auto v = f.array();
  const auto t = (T(kGeluC) * (v + T(kGeluA) * v.cube())).tanh();
  return (T(0.5) * v * (T(1) + t)).matrix();
}

template <typename T>
Matrix<T> gelu_backward(const Matrix<T>& f, const Matrix<T>& dg) {
  const auto v = f.array();
  const Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> t =
      (T(kGeluC) * (v + T(kGeluA) * v.cube())).tanh();
  const auto du = T(kGeluC) * (T(1) + T(3 * kGeluA) * v.square());
  return (dg.array() * (T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t.square()) * du)).matrix();
}

template <typename T>
void softmax_rows(Matrix<T>& s) {
  // The vectorized exp clamps its argument and returns denormals for masked
  // scores; anything below the normal range is flushed to an exact zero.
  const T floor = std::log(std::numeric_limits<T>::min());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    auto row = s.row(i);
    const T m = row.maxCoeff();
    const auto shifted = row.array() - m;
    row = (shifted < floor).select(T(0), shifted.exp());
    row /= row.sum();
  }
}

// Inverted dropout: entries are 0 or 1/(1-p).
template <typename T>
Matrix<T> dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, std::mt19937_64& rng) {
  Matrix<T> m(rows, cols);
  const T keep_scale = T(1.0 / (1.0 - p));
  T* data = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    data[i] = u < p ? T(0) : keep_scale;
  }
  return m;
}

template <typename T>
Matrix<T> mask_matrix(const AttentionMask& mask) {
  Matrix<T> m(mask.n, mask.n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(mask.values[static_cast<std::size_t>(i)]);
  return m;
}

// Rows of NLL for targets[r] given logits row r. dlogits gets scale * grad.
template <typename T>
double nll_rows(const Matrix<T>& logits, const std::vector<int>& targets, Matrix<T>* dlogits,
                T scale) {
  const Eigen::Index rows = logits.rows();
  if (static_cast<std::size_t>(rows) != targets.size()) {
    throw std::invalid_argument("logit rows do not match the target count");
  }
  double total = 0.0;
  if (dlogits) dlogits->resize(rows, logits.cols());
  for (Eigen::Index r = 0; r < rows; ++r) {
    const T m = logits.row(r).maxCoeff();
    const auto ex = (logits.row(r).array() - m).exp().eval();
    const T sum = ex.sum();
    const T lse = m + std::log(sum);
    const int tgt = targets[static_cast<std::size_t>(r)];
    total += static_cast<double>(lse - logits(r, tgt));
    if (dlogits) {
      const T w = scale / static_cast<T>(rows);
      dlogits->row(r) = ex * (w / sum);
      (*dlogits)(r, tgt) -= w;
    }
  }
  return total / static_cast<double>(rows);
}

template <typename T>
Matrix<T> summed_embeddings(const Parameters<T>& p, const Ablation& ab, const InputSequence& seq,
                            int d_model) {
  const int n = seq.size();
  Matrix<T> x(n, d_model);
  for (int i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    x.row(i) = p.token.row(seq.token_ids[u]) + p.position.row(seq.position_ids[u]);
    if (!ab.no_entity_embedding) x.row(i) += p.entity.row(seq.entity_ids[u]);
    if (!ab.no_triple_embedding) x.row(i) += p.triple.row(seq.triple_ids[u]);
    if (!ab.no_type_embedding) x.row(i) += p.type.row(seq.type_ids[u]);
  }
  return x;
}

}  // namespace

template <typename T>
LossResult response_nll(const Matrix<T>& logits, const InputSequence& seq, Matrix<T>* dlogits) {
  const int n = seq.size();
  const int count = n - seq.response_start;
  if (count <= 0 || seq.response_start < 1) {
    throw std::invalid_argument("sample '" + seq.sample_id + "': empty response span");
  }
  if (logits.rows() != n) throw std::invalid_argument("logits rows do not match the sequence");
  std::vector<int> targets(seq.token_ids.begin() + seq.response_start, seq.token_ids.end());
  const Matrix<T> rows = logits.middleRows(seq.response_start - 1, count);
  Matrix<T> drows;
  LossResult r;
  r.count = count;
  r.loss = nll_rows<T>(rows, targets, dlogits ? &drows : nullptr, T(1));
  if (dlogits) {
    dlogits->setZero(logits.rows(), logits.cols());
    dlogits->middleRows(seq.response_start - 1, count) = drows;
  }
  return r;
}

template LossResult response_nll<float>(const Matrix<float>&, const InputSequence&,
                                        Matrix<float>*);
template LossResult response_nll<double>(const Matrix<double>&, const InputSequence&,
                                         Matrix<double>*);

template <typename T>
Matrix<T> masked_attention(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                           const AttentionMask& mask) {
  if (q.cols() != k.cols() || k.rows() != v.rows() || mask.n != q.rows() || mask.n != k.rows()) {
    throw std::invalid_argument("attention: shape mismatch");
  }
  const T scale = T(1) / std::sqrt(static_cast<T>(q.cols()));
  Matrix<T> s = (q * k.transpose()) * scale + mask_matrix<T>(mask);
  softmax_rows(s);
  return s * v;
}

template Matrix<float> masked_attention<float>(const Matrix<float>&, const Matrix<float>&,
                                               const Matrix<float>&, const AttentionMask&);
template Matrix<double> masked_attention<double>(const Matrix<double>&, const Matrix<double>&,
                                                 const Matrix<double>&, const AttentionMask&);

// ---------------------------------------------------------------------------
// Transformer

template <typename T>
struct Transformer<T>::Cache {
  struct Block {
    NormCache<T> ln1;
    Matrix<T> a, q, k, v;
    std::vector<Matrix<T>> probs;
    Matrix<T> o;
    Matrix<T> attn_drop;
    NormCache<T> ln2;
    Matrix<T> c, f, g;
    Matrix<T> ffn_drop;
  };
  NormCache<T> emb_ln;
  Matrix<T> emb_drop;
  std::vector<Block> blocks;
  NormCache<T> final_ln;
};

template <typename T>
Transformer<T>::Transformer(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  params_ = Parameters<T>::zeros(cfg_);
  params_.emb_ln_gain.setOnes();
  for (auto& b : params_.blocks) {
    b.ln1_gain.setOnes();
    b.ln2_gain.setOnes();
  }
  params_.final_ln_gain.setOnes();
}

template <typename T>
void Transformer<T>::init_random(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](Matrix<T>& m, double stddev) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(stddev * normal(rng));
  };
  const double base = 0.02;
  const double resid = base / std::sqrt(2.0 * cfg_.n_layers);
  params_.set_zero();
  fill(params_.token, base);
  fill(params_.position, base);
  fill(params_.entity, base);
  fill(params_.triple, base);
  fill(params_.type, base);
  params_.emb_ln_gain.setOnes();
  for (auto& b : params_.blocks) {
    b.ln1_gain.setOnes();
    b.ln2_gain.setOnes();
    fill(b.w_q, base);
    fill(b.w_k, base);
    fill(b.w_v, base);
    fill(b.w_o, resid);
    fill(b.w_fc, base);
    fill(b.w_proj, resid);
  }
  params_.final_ln_gain.setOnes();
}

template <typename T>
void Transformer<T>::check_inputs(const InputSequence& seq, const AttentionMask& mask) const {
  const int n = seq.size();
  if (n == 0) throw std::invalid_argument("empty input sequence");
  if (n > cfg_.max_positions) {
    throw std::invalid_argument("sequence length " + std::to_string(n) + " exceeds max_positions " +
                                std::to_string(cfg_.max_positions));
  }
  if (mask.n != n) throw std::invalid_argument("attention mask size does not match the sequence");
  auto check = [n](const std::vector<int>& ids, int bound, const char* stream) {
    if (static_cast<int>(ids.size()) != n) {
      throw std::invalid_argument(std::string(stream) + " stream has the wrong length");
    }
    for (int id : ids) {
      if (id < 0 || id >= bound) {
        throw std::out_of_range(std::string(stream) + " id " + std::to_string(id) +
                                " outside table of size " + std::to_string(bound));
      }
    }
  };
  check(seq.token_ids, cfg_.vocab_size, "token");
  check(seq.position_ids, cfg_.max_positions, "position");
  check(seq.entity_ids, cfg_.max_entity_ids, "entity");
  check(seq.triple_ids, cfg_.max_triple_ids, "triple");
  check(seq.type_ids, cfg_.n_types, "type");
}

template <typename T>
Matrix<T> Transformer<T>::embed(const InputSequence& seq) const {
  auto check = [](const std::vector<int>& ids, Eigen::Index bound, const char* stream) {
    for (int id : ids) {
      if (id < 0 || id >= bound) {
        throw std::out_of_range(std::string(stream) + " id " + std::to_string(id) +
                                " outside table of size " + std::to_string(bound));
      }
    }
  };
  check(seq.token_ids, params_.token.rows(), "token");
  check(seq.position_ids, params_.position.rows(), "position");
  check(seq.entity_ids, params_.entity.rows(), "entity");
  check(seq.triple_ids, params_.triple.rows(), "triple");
  check(seq.type_ids, params_.type.rows(), "type");
  const Matrix<T> x = summed_embeddings(params_, cfg_.ablation, seq, cfg_.d_model);
  return layer_norm<T>(x, params_.emb_ln_gain, params_.emb_ln_bias, nullptr);
}

template <typename T>
Matrix<T> Transformer<T>::run(const InputSequence& seq, const AttentionMask& mask, Cache* cache,
                              std::mt19937_64* rng, int first_row) const {
  check_inputs(seq, mask);
  const int n = seq.size();
  if (first_row < 0 || first_row >= n) throw std::invalid_argument("first_row out of range");
  const int d = cfg_.d_model;
  const int dk = cfg_.head_dim();
  const T scale = T(1) / std::sqrt(static_cast<T>(dk));
  const bool drop = rng != nullptr && cfg_.dropout > 0.0;

  Matrix<T> x = summed_embeddings(params_, cfg_.ablation, seq, d);
  x = layer_norm<T>(x, params_.emb_ln_gain, params_.emb_ln_bias, cache ? &cache->emb_ln : nullptr);
  if (drop) {
    Matrix<T> m = dropout_mask<T>(n, d, cfg_.dropout, *rng);
    x.array() *= m.array();
    if (cache) cache->emb_drop = std::move(m);
  }

  const Matrix<T> additive = mask_matrix<T>(mask);
  if (cache) cache->blocks.resize(params_.blocks.size());

  for (std::size_t l = 0; l < params_.blocks.size(); ++l) {
    const auto& b = params_.blocks[l];
    typename Cache::Block* bc = cache ? &cache->blocks[l] : nullptr;
    const int m = l + 1 == params_.blocks.size() ? n - first_row : n;  // output rows
    NormCache<T> ln1;
    Matrix<T> a = layer_norm<T>(x, b.ln1_gain, b.ln1_bias, bc ? &ln1 : nullptr);
    Matrix<T> q = a.bottomRows(m) * b.w_q;
    q.rowwise() += b.b_q.row(0);
    Matrix<T> k = a * b.w_k;
    k.rowwise() += b.b_k.row(0);
    Matrix<T> v = a * b.w_v;
    v.rowwise() += b.b_v.row(0);

    Matrix<T> o(m, d);
    std::vector<Matrix<T>> probs;
    for (int h = 0; h < cfg_.n_heads; ++h) {
      Matrix<T> s = (q.middleCols(h * dk, dk) * k.middleCols(h * dk, dk).transpose()) * scale;
      s += additive.bottomRows(m);
      softmax_rows(s);
      o.middleCols(h * dk, dk).noalias() = s * v.middleCols(h * dk, dk);
      if (bc) probs.push_back(std::move(s));
    }
    Matrix<T> y = o * b.w_o;
    y.rowwise() += b.b_o.row(0);
    Matrix<T> attn_drop;
    if (drop) {
      attn_drop = dropout_mask<T>(m, d, cfg_.dropout, *rng);
      y.array() *= attn_drop.array();
    }
    if (m < n) x = x.bottomRows(m).eval();
    x += y;

    NormCache<T> ln2;
    Matrix<T> c = layer_norm<T>(x, b.ln2_gain, b.ln2_bias, bc ? &ln2 : nullptr);
    Matrix<T> f = c * b.w_fc;
    f.rowwise() += b.b_fc.row(0);
    Matrix<T> g = gelu<T>(f);
    Matrix<T> z = g * b.w_proj;
    z.rowwise() += b.b_proj.row(0);
    Matrix<T> ffn_drop;
    if (drop) {
      ffn_drop = dropout_mask<T>(m, d, cfg_.dropout, *rng);
      z.array() *= ffn_drop.array();
    }
    x += z;

    if (bc) {
      bc->ln1 = std::move(ln1);
      bc->a = std::move(a);
      bc->q = std::move(q);
      bc->k = std::move(k);
      bc->v = std::move(v);
      bc->probs = std::move(probs);
      bc->o = std::move(o);
      bc->attn_drop = std::move(attn_drop);
      bc->ln2 = std::move(ln2);
      bc->c = std::move(c);
      bc->f = std::move(f);
      bc->g = std::move(g);
      bc->ffn_drop = std::move(ffn_drop);
    }
  }
  Matrix<T> hidden =
      layer_norm<T>(x, params_.final_ln_gain, params_.final_ln_bias, cache ? &cache->final_ln : nullptr);
  if (!hidden.allFinite()) {
    throw NumericError("non-finite hidden state for sample '" + seq.sample_id + "'");
  }
  return hidden;
}

template <typename T>
Matrix<T> Transformer<T>::forward(const InputSequence& seq, const AttentionMask& mask) const {
  const Matrix<T> hidden = run(seq, mask, nullptr, nullptr);
  Matrix<T> logits = hidden * params_.token.transpose();
  if (!logits.allFinite()) throw NumericError("non-finite logits for sample '" + seq.sample_id + "'");
  return logits;
}

template <typename T>
Eigen::Matrix<T, 1, Eigen::Dynamic> Transformer<T>::last_logits(const InputSequence& seq,
                                                                const AttentionMask& mask) const {
  const Matrix<T> hidden = run(seq, mask, nullptr, nullptr, seq.size() - 1);
  Eigen::Matrix<T, 1, Eigen::Dynamic> logits = hidden.row(0) * params_.token.transpose();
  if (!logits.allFinite()) throw NumericError("non-finite logits for sample '" + seq.sample_id + "'");
  return logits;
}

template <typename T>
double Transformer<T>::loss(const InputSequence& seq, const AttentionMask& mask) const {
  const int count = seq.size() - seq.response_start;
  if (count <= 0 || seq.response_start < 1) {
    throw std::invalid_argument("sample '" + seq.sample_id + "': empty response span");
  }
  const Matrix<T> hidden = run(seq, mask, nullptr, nullptr, seq.response_start - 1);
  const Matrix<T> logits = hidden.topRows(count) * params_.token.transpose();
  std::vector<int> targets(seq.token_ids.begin() + seq.response_start, seq.token_ids.end());
  return nll_rows<T>(logits, targets, nullptr, T(1));
}

template <typename T>
double Transformer<T>::accumulate_gradients(const InputSequence& seq, const AttentionMask& mask,
                                            Parameters<T>& grads, T scale,
                                            std::mt19937_64* rng) const {
  const int n = seq.size();
  const int count = n - seq.response_start;
  if (count <= 0 || seq.response_start < 1) {
    throw std::invalid_argument("sample '" + seq.sample_id + "': empty response span");
  }
  const int d = cfg_.d_model;
  const int dk = cfg_.head_dim();
  const T attn_scale = T(1) / std::sqrt(static_cast<T>(dk));
  const auto& ab = cfg_.ablation;

  Cache cache;
  // Rows response_start-1 .. n-1; the final row predicts nothing.
  const Matrix<T> hidden = run(seq, mask, &cache, rng, seq.response_start - 1);
  const Matrix<T> h_rows = hidden.topRows(count);
  const Matrix<T> logits = h_rows * params_.token.transpose();
  std::vector<int> targets(seq.token_ids.begin() + seq.response_start, seq.token_ids.end());
  Matrix<T> dlogits;
  const double loss = nll_rows<T>(logits, targets, &dlogits, scale);
  if (!std::isfinite(loss)) {
    throw NumericError("non-finite loss for sample '" + seq.sample_id + "'");
  }

  // Tied head.
  grads.token.noalias() += dlogits.transpose() * h_rows;
  Matrix<T> dx = Matrix<T>::Zero(count + 1, d);
  dx.topRows(count).noalias() = dlogits * params_.token;
  dx = layer_norm_backward<T>(dx, cache.final_ln, params_.final_ln_gain, grads.final_ln_gain,
                              grads.final_ln_bias);

  for (std::size_t li = params_.blocks.size(); li-- > 0;) {
    const auto& b = params_.blocks[li];
    auto& gb = grads.blocks[li];
    const auto& bc = cache.blocks[li];
    const int m = static_cast<int>(dx.rows());  // output rows of this block

    // Feed-forward branch.
    Matrix<T> dz = dx;
    if (bc.ffn_drop.size() > 0) dz.array() *= bc.ffn_drop.array();
    gb.w_proj.noalias() += bc.g.transpose() * dz;
    gb.b_proj += dz.colwise().sum();
    Matrix<T> dg = dz * b.w_proj.transpose();
    Matrix<T> df = gelu_backward<T>(bc.f, dg);
    gb.w_fc.noalias() += bc.c.transpose() * df;
    gb.b_fc += df.colwise().sum();
    Matrix<T> dc = df * b.w_fc.transpose();
    dx += layer_norm_backward<T>(dc, bc.ln2, b.ln2_gain, gb.ln2_gain, gb.ln2_bias);

    // Attention branch.
    Matrix<T> dy = dx;
    if (bc.attn_drop.size() > 0) dy.array() *= bc.attn_drop.array();
    gb.w_o.noalias() += bc.o.transpose() * dy;
    gb.b_o += dy.colwise().sum();
    const Matrix<T> d_o = dy * b.w_o.transpose();
    Matrix<T> dq(m, d), dk_(n, d), dv(n, d);
    for (int h = 0; h < cfg_.n_heads; ++h) {
      const Matrix<T>& p = bc.probs[static_cast<std::size_t>(h)];
      const auto doh = d_o.middleCols(h * dk, dk);
      dv.middleCols(h * dk, dk).noalias() = p.transpose() * doh;
      Matrix<T> dp = doh * bc.v.middleCols(h * dk, dk).transpose();
      const Column<T> row_dot = (dp.array() * p.array()).rowwise().sum();
      Matrix<T> ds = (p.array() * (dp.array().colwise() - row_dot.array())).matrix() * attn_scale;
      dq.middleCols(h * dk, dk).noalias() = ds * bc.k.middleCols(h * dk, dk);
      dk_.middleCols(h * dk, dk).noalias() = ds.transpose() * bc.q.middleCols(h * dk, dk);
    }
    gb.w_q.noalias() += bc.a.bottomRows(m).transpose() * dq;
    gb.b_q += dq.colwise().sum();
    gb.w_k.noalias() += bc.a.transpose() * dk_;
    gb.b_k += dk_.colwise().sum();
    gb.w_v.noalias() += bc.a.transpose() * dv;
    gb.b_v += dv.colwise().sum();
    Matrix<T> da = dk_ * b.w_k.transpose();
    da.noalias() += dv * b.w_v.transpose();
    da.bottomRows(m).noalias() += dq * b.w_q.transpose();
    Matrix<T> dx_in = layer_norm_backward<T>(da, bc.ln1, b.ln1_gain, gb.ln1_gain, gb.ln1_bias);
    dx_in.bottomRows(m) += dx;
    dx = std::move(dx_in);
  }

  if (cache.emb_drop.size() > 0) dx.array() *= cache.emb_drop.array();
  const Matrix<T> de =
      layer_norm_backward<T>(dx, cache.emb_ln, params_.emb_ln_gain, grads.emb_ln_gain, grads.emb_ln_bias);
  for (int i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    grads.token.row(seq.token_ids[u]) += de.row(i);
    grads.position.row(seq.position_ids[u]) += de.row(i);
    if (!ab.no_entity_embedding) grads.entity.row(seq.entity_ids[u]) += de.row(i);
    if (!ab.no_triple_embedding) grads.triple.row(seq.triple_ids[u]) += de.row(i);
    if (!ab.no_type_embedding) grads.type.row(seq.type_ids[u]) += de.row(i);
  }
  return loss;
}

template <typename T>
std::pair<double, Parameters<T>> Transformer<T>::backward(const InputSequence& seq,
                                                          const AttentionMask& mask) const {
  Parameters<T> grads = Parameters<T>::zeros(cfg_);
  const double l = accumulate_gradients(seq, mask, grads, T(1), nullptr);
  return {l, std::move(grads)};
}

template class Transformer<float>;
template class Transformer<double>;
template struct Parameters<float>;
template struct Parameters<double>;

}  // namespace kgdial
