#include "emgo/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "emgo/error.hpp"

namespace emgo {

namespace {

constexpr char kMagic[8] = {'E', 'M', 'G', 'O', 'M', 'D', 'L', '\0'};

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void vec(const Eigen::VectorXd& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  void mat(const Eigen::MatrixXd& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) f64(m(r, c));
  }
  void ints(const std::vector<int>& v) {
    u64(v.size());
    for (int x : v) i32(x);
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes(b) {}
  void need(std::size_t n) const {
    if (bytes.size() - pos < n)
      throw Error(ErrorCode::BadModel, "truncated model at byte " + std::to_string(pos));
  }
  std::uint8_t u8() {
    need(1);
    return bytes[pos++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() {
    const double v = std::bit_cast<double>(u64());
    if (!std::isfinite(v)) throw Error(ErrorCode::BadModel, "non-finite parameter");
    return v;
  }
  std::size_t count(std::size_t elem_bytes) {
    const std::uint64_t n = u64();
    if (elem_bytes > 0 && n > (bytes.size() - pos) / elem_bytes)
      throw Error(ErrorCode::BadModel, "implausible block length at byte " + std::to_string(pos));
    return static_cast<std::size_t>(n);
  }
  Eigen::VectorXd vec() {
    const auto n = static_cast<Eigen::Index>(count(8));
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = f64();
    return v;
  }
  Eigen::MatrixXd mat() {
    const std::uint64_t r = u64();
    const std::uint64_t c = u64();
    if (r != 0 && c > (bytes.size() - pos) / 8 / r)
      throw Error(ErrorCode::BadModel, "implausible matrix shape");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = f64();
    return m;
  }
  std::vector<int> ints() {
    const std::size_t n = count(4);
    std::vector<int> v(n);
    for (auto& x : v) x = i32();
    return v;
  }
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

template <typename E>
E enum_in(std::uint8_t v, std::uint8_t count, const char* what) {
  if (v >= count) throw Error(ErrorCode::BadModel, std::string("bad ") + what);
  return static_cast<E>(v);
}

void bad(const std::string& what) { throw Error(ErrorCode::BadModel, what); }

// Shape and range checks so a loaded model can never index out of bounds.
void check_consistency(const TrainedModel& m) {
  const auto& p = m.pipeline;
  if (p.n_channels < 1 || p.n_channels > 255) bad("channel count out of range");
  if (p.features.ar_order < 1 || p.features.ar_order > 64) bad("AR order out of range");
  if (!(p.features.moment_lambda > 0.0)) bad("moment lambda must be positive");
  try {
    p.filter.validate();
  } catch (const Error& e) {
    bad(std::string("filter: ") + e.what());
  }
  const auto expected = static_cast<Eigen::Index>(feature_dimension(p.method, p.n_channels, p.features));
  if (m.projection.input_dim() != expected) bad("projection input does not match the feature dimension");

  const auto& c = m.classifier;
  const auto k = static_cast<Eigen::Index>(c.classes.size());
  if (!std::is_sorted(c.classes.begin(), c.classes.end()) ||
      std::adjacent_find(c.classes.begin(), c.classes.end()) != c.classes.end())
    bad("class list must be strictly increasing");
  switch (c.kind) {
    case ClassifierKind::LDA: {
      const auto& lda = std::get<LdaParams>(c.params);
      if (lda.means.rows() != k || lda.means.cols() != c.dim || lda.inv_cov.rows() != c.dim ||
          lda.inv_cov.cols() != c.dim || lda.log_priors.size() != k)
        bad("inconsistent LDA shape");
      break;
    }
    case ClassifierKind::KNN: {
      const auto& knn = std::get<KnnParams>(c.params);
      if (c.hyper.knn_k < 1) bad("k must be positive");
      if (knn.train.cols() != c.dim || knn.train.rows() != static_cast<Eigen::Index>(knn.labels.size()) ||
          knn.train.rows() == 0)
        bad("inconsistent KNN shape");
      for (int l : knn.labels)
        if (l < 0 || l >= k) bad("KNN label out of range");
      break;
    }
    case ClassifierKind::SVM: {
      const auto& svm = std::get<SvmParams>(c.params);
      if (!(c.hyper.svm_kernel_scale > 0.0)) bad("kernel scale must be positive");
      if (svm.support.cols() != c.dim && svm.support.rows() > 0) bad("inconsistent SVM shape");
      for (const auto& pr : svm.pairs)
        if (pr.first < 0 || pr.first >= k || pr.second < 0 || pr.second >= k || pr.first == pr.second)
          bad("SVM pair class out of range");
      break;
    }
  }
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const TrainedModel& m) {
  Writer w;
  w.out.insert(w.out.end(), std::begin(kMagic), std::end(kMagic));
  w.u32(kModelVersion);

  const auto& p = m.pipeline;
  w.u8(static_cast<std::uint8_t>(p.method));
  w.u32(p.n_channels);
  w.f64(p.filter.sample_rate);
  w.f64(p.filter.band_low);
  w.f64(p.filter.band_high);
  w.i32(p.filter.band_order);
  w.f64(p.filter.notch_freq);
  w.f64(p.filter.notch_bandwidth);
  w.u8(static_cast<std::uint8_t>(p.filter.mode));
  w.u8(static_cast<std::uint8_t>(p.features.tsd_pairing));
  w.f64(p.features.moment_lambda);
  w.f64(p.features.threshold);
  w.i32(p.features.ar_order);

  const auto& h = m.classifier.hyper;
  w.i32(h.knn_k);
  w.f64(h.svm_kernel_scale);
  w.f64(h.svm_c);
  w.f64(h.svm_tol);
  w.f64(h.lda_shrinkage);
  w.f64(h.srda_alpha);

  w.vec(m.projection.mean);
  w.vec(m.projection.scale);
  w.mat(m.projection.basis);
  w.f64(m.projection.alpha);

  const auto& c = m.classifier;
  w.u8(static_cast<std::uint8_t>(c.kind));
  w.ints(c.classes);
  w.u64(static_cast<std::uint64_t>(c.dim));
  if (const auto* lda = std::get_if<LdaParams>(&c.params)) {
    w.mat(lda->means);
    w.mat(lda->inv_cov);
    w.vec(lda->log_priors);
    w.u8(lda->singular_before_shrinkage ? 1 : 0);
  } else if (const auto* knn = std::get_if<KnnParams>(&c.params)) {
    w.mat(knn->train);
    w.ints(knn->labels);
  } else {
    const auto& svm = std::get<SvmParams>(c.params);
    w.mat(svm.support);
    w.u64(svm.pairs.size());
    for (const auto& pr : svm.pairs) {
      w.i32(pr.first);
      w.i32(pr.second);
      w.ints(pr.sv);
      w.vec(pr.coef);
      w.f64(pr.bias);
      w.i32(pr.iterations);
      w.u8(pr.converged ? 1 : 0);
    }
  }
  return std::move(w.out);
}

TrainedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(sizeof(kMagic));
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw Error(ErrorCode::BadModel, "not a model file");
  r.pos = sizeof(kMagic);
  const std::uint32_t version = r.u32();
  if (version != kModelVersion)
    throw Error(ErrorCode::BadModel, "unsupported model version " + std::to_string(version));

  TrainedModel m;
  auto& p = m.pipeline;
  p.method = enum_in<FeatureMethod>(r.u8(), static_cast<std::uint8_t>(kAllMethods.size()), "feature method");
  p.n_channels = r.u32();
  p.filter.sample_rate = r.f64();
  p.filter.band_low = r.f64();
  p.filter.band_high = r.f64();
  p.filter.band_order = r.i32();
  p.filter.notch_freq = r.f64();
  p.filter.notch_bandwidth = r.f64();
  p.filter.mode = enum_in<FilterMode>(r.u8(), 2, "filter mode");
  p.features.tsd_pairing = enum_in<TsdPairing>(r.u8(), 2, "tsd pairing");
  p.features.moment_lambda = r.f64();
  p.features.threshold = r.f64();
  p.features.ar_order = r.i32();

  Hyper h;
  h.knn_k = r.i32();
  h.svm_kernel_scale = r.f64();
  h.svm_c = r.f64();
  h.svm_tol = r.f64();
  h.lda_shrinkage = r.f64();
  h.srda_alpha = r.f64();

  m.projection.mean = r.vec();
  m.projection.scale = r.vec();
  m.projection.basis = r.mat();
  m.projection.alpha = r.f64();

  auto& c = m.classifier;
  c.hyper = h;
  c.kind = enum_in<ClassifierKind>(r.u8(), 3, "classifier kind");
  c.classes = r.ints();
  c.dim = static_cast<Eigen::Index>(r.u64());
  switch (c.kind) {
    case ClassifierKind::LDA: {
      LdaParams lda;
      lda.means = r.mat();
      lda.inv_cov = r.mat();
      lda.log_priors = r.vec();
      lda.singular_before_shrinkage = r.u8() != 0;
      c.params = std::move(lda);
      break;
    }
    case ClassifierKind::KNN: {
      KnnParams knn;
      knn.train = r.mat();
      knn.labels = r.ints();
      c.params = std::move(knn);
      break;
    }
    case ClassifierKind::SVM: {
      SvmParams svm;
      svm.support = r.mat();
      svm.pairs.resize(r.count(1));
      for (auto& pr : svm.pairs) {
        pr.first = r.i32();
        pr.second = r.i32();
        pr.sv = r.ints();
        pr.coef = r.vec();
        if (pr.coef.size() != static_cast<Eigen::Index>(pr.sv.size()))
          throw Error(ErrorCode::BadModel, "support index and coefficient counts differ");
        for (int s : pr.sv)
          if (s < 0 || s >= svm.support.rows()) throw Error(ErrorCode::BadModel, "support index out of range");
        pr.bias = r.f64();
        pr.iterations = r.i32();
        pr.converged = r.u8() != 0;
      }
      c.params = std::move(svm);
      break;
    }
  }
  if (r.pos != bytes.size()) throw Error(ErrorCode::BadModel, "trailing bytes after model");
  if (m.projection.scale.size() != m.projection.mean.size() ||
      m.projection.basis.rows() != m.projection.mean.size() || m.projection.basis.cols() != c.dim)
    throw Error(ErrorCode::BadModel, "inconsistent projection shape");
  if (c.classes.size() < 2) throw Error(ErrorCode::BadModel, "model has fewer than two classes");
  check_consistency(m);
  return m;
}

void save_model(const TrainedModel& m, const std::filesystem::path& path) {
  const auto bytes = serialize_model(m);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace emgo
