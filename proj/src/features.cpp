#include "emgo/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <string>

#include "emgo/error.hpp"

namespace emgo {

namespace {

constexpr double kLogEps = 1e-12;
constexpr double kTransformEps = 1e-8;

// log(v), substituting eps for a non-positive or non-finite argument.
double safe_log(double v, unsigned& flags) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    flags |= kFlagDegenerateMoments;
    return std::log(kLogEps);
  }
  return std::log(v);
}

double safe_ratio(double num, double den, unsigned& flags) {
  if (!(den > 0.0)) {
    flags |= kFlagDegenerateMoments;
    return kLogEps;
  }
  return num / den;
}

std::vector<double> diff(std::span<const double> x) {
  std::vector<double> d(x.size() > 0 ? x.size() - 1 : 0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  return d;
}

double sum_sq(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double waveform_length(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) s += std::abs(x[i + 1] - x[i]);
  return s;
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

bool all_zero(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
}

void require_energy(const Window& w, std::size_t c) {
  if (all_zero(w.channel(c)))
    throw Error(ErrorCode::ZeroEnergyChannel,
                to_string(w.key) + " window " + std::to_string(w.index) + " channel " +
                    std::to_string(c + 1));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean_of(a), mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

FeatureVector start(FeatureMethod m, const Window& w) {
  FeatureVector fv;
  fv.method = m;
  fv.key = w.key;
  fv.window_index = w.index;
  return fv;
}

// Streams TSD works on: the channels, then channel differences.
std::vector<std::vector<double>> tsd_streams(const Window& w, TsdPairing pairing) {
  std::vector<std::vector<double>> streams;
  const std::size_t c = w.n_channels;
  for (std::size_t i = 0; i < c; ++i) {
    auto ch = w.channel(i);
    streams.emplace_back(ch.begin(), ch.end());
  }
  auto push_diff = [&](std::size_t i, std::size_t j) {
    auto a = w.channel(i), b = w.channel(j);
    std::vector<double> d(w.length);
    for (std::size_t t = 0; t < w.length; ++t) d[t] = b[t] - a[t];
    streams.push_back(std::move(d));
  };
  if (pairing == TsdPairing::Sequential) {
    for (std::size_t i = 0; i + 1 < c; ++i) push_diff(i, i + 1);
  } else {
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = i + 1; j < c; ++j) push_diff(i, j);
  }
  return streams;
}

std::string lower(std::string_view s) {
  std::string out;
  for (char ch : s)
    if (ch != '-' && ch != '_') out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace

std::string_view to_string(FeatureMethod m) {
  switch (m) {
    case FeatureMethod::SNTDF: return "SNTDF";
    case FeatureMethod::HSL: return "HSL";
    case FeatureMethod::TSD: return "TSD";
    case FeatureMethod::TDD: return "TDD";
    case FeatureMethod::FTDD: return "FTDD";
    case FeatureMethod::ARRMS: return "AR-RMS";
  }
  return "?";
}

std::optional<FeatureMethod> parse_method(std::string_view s) {
  const std::string l = lower(s);
  for (FeatureMethod m : kAllMethods)
    if (lower(to_string(m)) == l) return m;
  return std::nullopt;
}

std::size_t feature_dimension(FeatureMethod m, std::size_t c, const FeatureOptions& opt) {
  switch (m) {
    case FeatureMethod::SNTDF: return 7 * c + c * (c - 1) / 2;
    case FeatureMethod::HSL: return 5 * c;
    case FeatureMethod::TSD:
      return opt.tsd_pairing == TsdPairing::Sequential ? 7 * (2 * c - 1) : 7 * (c + c * (c - 1) / 2);
    case FeatureMethod::TDD: return 5 * c;
    case FeatureMethod::FTDD: return 6 * c;
    case FeatureMethod::ARRMS: return static_cast<std::size_t>(opt.ar_order + 1) * c;
  }
  return 0;
}

namespace detail {

std::array<double, 5> tdd_descriptors(std::span<const double> x, double lambda, unsigned& flags) {
  const std::vector<double> d1 = diff(x);
  const std::vector<double> d2 = diff(d1);
  const double norm = x.size() > 1 ? 1.0 / static_cast<double>(x.size() - 1) : 1.0;
  auto power = [lambda](double v) { return std::pow(v, lambda) / lambda; };
  const double m0 = power(std::sqrt(sum_sq(x)));
  const double m2 = power(std::sqrt(sum_sq(d1) * norm));
  const double m4 = power(std::sqrt(sum_sq(d2) * norm));

  double d02 = m0 - m2;
  double d04 = m0 - m4;
  if (!(d02 > 0.0)) {
    d02 = kLogEps;
    flags |= kFlagDegenerateMoments;
  }
  if (!(d04 > 0.0)) {
    d04 = kLogEps;
    flags |= kFlagDegenerateMoments;
  }
  return {safe_log(m0, flags), std::log(d02), std::log(d04),
          safe_log(safe_ratio(m0, std::sqrt(d02 * d04), flags), flags),
          safe_log(safe_ratio(m2, std::sqrt(m0 * m4), flags), flags)};
}

std::array<double, 6> ftdd_descriptors(std::span<const double> x, double lambda, unsigned& flags) {
  const auto t = tdd_descriptors(x, lambda, flags);
  const std::vector<double> d1 = diff(x);
  const std::vector<double> d2 = diff(d1);
  const double wl_ratio = safe_ratio(waveform_length(d1), waveform_length(d2), flags);
  return {t[0], t[1], t[2], t[3], t[4], safe_log(wl_ratio, flags)};
}

std::array<double, 6> fuse_descriptors(const std::array<double, 6>& dx,
                                       const std::array<double, 6>& dy) {
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    dot += dx[i] * dy[i];
    nx += dx[i] * dx[i];
    ny += dy[i] * dy[i];
  }
  const double cos_theta = nx > 0.0 && ny > 0.0 ? dot / std::sqrt(nx * ny) : 0.0;
  std::array<double, 6> out{};
  for (std::size_t i = 0; i < 6; ++i) {
    const double p = dx[i] * dy[i];
    const double sign = p > 0.0 ? 1.0 : (p < 0.0 ? -1.0 : 0.0);
    out[i] = cos_theta * sign * std::sqrt(std::abs(p));
  }
  return out;
}

std::vector<double> burg(std::span<const double> x, int order, bool& clamped) {
  const std::size_t n = x.size();
  const auto p = static_cast<std::size_t>(order);
  std::vector<double> a(p + 1, 0.0);
  a[0] = 1.0;
  std::vector<double> f(x.begin(), x.end());
  std::vector<double> b(x.begin(), x.end());
  double dk = 0.0;
  for (std::size_t t = 0; t < n; ++t) dk += 2.0 * x[t] * x[t];
  dk -= x[0] * x[0] + x[n - 1] * x[n - 1];

  for (std::size_t k = 0; k < p; ++k) {
    double mu = 0.0;
    for (std::size_t t = 0; t + k + 1 < n; ++t) mu += f[t + k + 1] * b[t];
    mu = dk > 0.0 ? -2.0 * mu / dk : 0.0;
    if (std::abs(mu) >= 1.0) {
      mu = std::copysign(1.0 - 1e-9, mu);
      clamped = true;
    }
    for (std::size_t i = 0; i <= (k + 1) / 2; ++i) {
      const double lo = a[i] + mu * a[k + 1 - i];
      const double hi = a[k + 1 - i] + mu * a[i];
      a[i] = lo;
      a[k + 1 - i] = hi;
    }
    for (std::size_t t = 0; t + k + 1 < n; ++t) {
      const double ft = f[t + k + 1] + mu * b[t];
      const double bt = b[t] + mu * f[t + k + 1];
      f[t + k + 1] = ft;
      b[t] = bt;
    }
    dk = (1.0 - mu * mu) * dk - f[k + 1] * f[k + 1] - b[n - k - 2] * b[n - k - 2];
  }
  return {a.begin() + 1, a.end()};
}

Hjorth hjorth(std::span<const double> x) {
  const std::vector<double> d1 = diff(x);
  const std::vector<double> d2 = diff(d1);
  const double v0 = variance(x), v1 = variance(d1), v2 = variance(d2);
  const double mob_x = v0 > 0.0 ? std::sqrt(v1 / v0) : 0.0;
  const double mob_d = v1 > 0.0 ? std::sqrt(v2 / v1) : 0.0;
  return {v0, mob_x, mob_x > 0.0 ? mob_d / mob_x : 0.0};
}

}  // namespace detail

FeatureVector extract_sntdf(const Window& w, const FeatureOptions& opt) {
  FeatureVector fv = start(FeatureMethod::SNTDF, w);
  const std::size_t c = w.n_channels;
  const std::size_t n = w.length;
  const double eps = opt.threshold;
  std::vector<std::vector<double>> norm(c);
  fv.values.reserve(feature_dimension(FeatureMethod::SNTDF, c));

  for (std::size_t ch = 0; ch < c; ++ch) {
    require_energy(w, ch);
    auto x = w.channel(ch);
    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    auto& y = norm[ch];
    y.resize(n);
    for (std::size_t t = 0; t < n; ++t) y[t] = x[t] / peak;

    double mav = 0.0, ms = 0.0;
    for (double v : y) {
      mav += std::abs(v);
      ms += v * v;
    }
    mav /= static_cast<double>(n);
    const double rms = std::sqrt(ms / static_cast<double>(n));

    double zc = 0.0, ssc = 0.0;
    for (std::size_t t = 0; t + 1 < n; ++t) {
      const bool crosses = (y[t] > 0.0 && y[t + 1] < 0.0) || (y[t] < 0.0 && y[t + 1] > 0.0);
      if (crosses && std::abs(y[t] - y[t + 1]) >= eps) zc += 1.0;
    }
    for (std::size_t t = 1; t + 1 < n; ++t) {
      const double l = y[t] - y[t - 1];
      const double r = y[t] - y[t + 1];
      if (l * r > 0.0 && (std::abs(l) >= eps || std::abs(r) >= eps)) ssc += 1.0;
    }

    const double m = mean_of(y);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : y) {
      const double d = v - m;
      m2 += d * d;
      m3 += d * d * d;
      m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    const double skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    const double kurt = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;

    fv.values.insert(fv.values.end(),
                     {mav, rms, waveform_length(y), zc, ssc, skew, kurt});
  }
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = i + 1; j < c; ++j) fv.values.push_back(pearson(norm[i], norm[j]));
  return fv;
}

FeatureVector extract_hsl(const Window& w, const FeatureOptions&) {
  FeatureVector fv = start(FeatureMethod::HSL, w);
  for (std::size_t ch = 0; ch < w.n_channels; ++ch) {
    require_energy(w, ch);
    auto x = w.channel(ch);
    const auto h = detail::hjorth(x);
    if (!(h.activity > 0.0))
      throw Error(ErrorCode::ZeroEnergyChannel, to_string(w.key) + ": constant channel");
    const auto hd = detail::hjorth(diff(x));
    fv.values.insert(fv.values.end(),
                     {h.activity, h.mobility, h.complexity, hd.mobility, hd.complexity});
  }
  return fv;
}

FeatureVector extract_tdd(const Window& w, const FeatureOptions& opt) {
  FeatureVector fv = start(FeatureMethod::TDD, w);
  for (std::size_t ch = 0; ch < w.n_channels; ++ch) {
    require_energy(w, ch);
    const auto d = detail::tdd_descriptors(w.channel(ch), opt.moment_lambda, fv.flags);
    fv.values.insert(fv.values.end(), d.begin(), d.end());
  }
  return fv;
}

FeatureVector extract_tsd(const Window& w, const FeatureOptions& opt) {
  if (w.n_channels < 2)
    throw Error(ErrorCode::DimensionMismatch, "TSD needs at least two channels");
  FeatureVector fv = start(FeatureMethod::TSD, w);
  for (std::size_t ch = 0; ch < w.n_channels; ++ch) require_energy(w, ch);
  for (const auto& s : tsd_streams(w, opt.tsd_pairing)) {
    if (all_zero(s)) fv.flags |= kFlagZeroEnergyStream;
    const auto d = detail::ftdd_descriptors(s, opt.moment_lambda, fv.flags);
    double tke = 0.0;
    for (std::size_t t = 1; t + 1 < s.size(); ++t) tke += s[t] * s[t] - s[t - 1] * s[t + 1];
    fv.values.insert(fv.values.end(), d.begin(), d.end());
    fv.values.push_back(safe_log(tke, fv.flags));
  }
  return fv;
}

FeatureVector extract_ftdd(const Window& w, const FeatureOptions& opt) {
  FeatureVector fv = start(FeatureMethod::FTDD, w);
  std::vector<double> y(w.length);
  for (std::size_t ch = 0; ch < w.n_channels; ++ch) {
    require_energy(w, ch);
    auto x = w.channel(ch);
    for (std::size_t t = 0; t < w.length; ++t) y[t] = std::log(x[t] * x[t] + kTransformEps);
    const auto dx = detail::ftdd_descriptors(x, opt.moment_lambda, fv.flags);
    const auto dy = detail::ftdd_descriptors(y, opt.moment_lambda, fv.flags);
    const auto fused = detail::fuse_descriptors(dx, dy);
    fv.values.insert(fv.values.end(), fused.begin(), fused.end());
  }
  return fv;
}

FeatureVector extract_arrms(const Window& w, const FeatureOptions& opt) {
  if (w.length <= static_cast<std::size_t>(opt.ar_order))
    throw Error(ErrorCode::TooShort, "window shorter than the AR order");
  FeatureVector fv = start(FeatureMethod::ARRMS, w);
  for (std::size_t ch = 0; ch < w.n_channels; ++ch) {
    auto x = w.channel(ch);
    if (all_zero(x)) {
      fv.flags |= kFlagZeroEnergyStream;
      fv.values.insert(fv.values.end(), static_cast<std::size_t>(opt.ar_order + 1), 0.0);
      continue;
    }
    bool clamped = false;
    const auto a = detail::burg(x, opt.ar_order, clamped);
    if (clamped) fv.flags |= kFlagIllConditioned;
    fv.values.insert(fv.values.end(), a.begin(), a.end());
    fv.values.push_back(std::sqrt(sum_sq(x) / static_cast<double>(x.size())));
  }
  return fv;
}

FeatureVector extract(FeatureMethod m, const Window& w, const FeatureOptions& opt) {
  switch (m) {
    case FeatureMethod::SNTDF: return extract_sntdf(w, opt);
    case FeatureMethod::HSL: return extract_hsl(w, opt);
    case FeatureMethod::TSD: return extract_tsd(w, opt);
    case FeatureMethod::TDD: return extract_tdd(w, opt);
    case FeatureMethod::FTDD: return extract_ftdd(w, opt);
    case FeatureMethod::ARRMS: return extract_arrms(w, opt);
  }
  throw Error(ErrorCode::UnknownMethod, "unknown feature method");
}

FeatureVector extract(std::string_view method, const Window& w, const FeatureOptions& opt) {
  const auto m = parse_method(method);
  if (!m) throw Error(ErrorCode::UnknownMethod, std::string(method));
  return extract(*m, w, opt);
}

std::vector<FeatureVector> extract_batch(FeatureMethod m, std::span<const Window> windows,
                                         const FeatureOptions& opt) {
  std::vector<FeatureVector> out(windows.size());
  std::vector<std::exception_ptr> errors(windows.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(windows.size()); ++i) {
    try {
      out[i] = extract(m, windows[i], opt);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<FeatureVector> extract_batch_serial(FeatureMethod m, std::span<const Window> windows,
                                                const FeatureOptions& opt) {
  std::vector<FeatureVector> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(extract(m, w, opt));
  return out;
}

}  // namespace emgo
