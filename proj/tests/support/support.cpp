#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include <unistd.h>

#include <opencv2/core.hpp>
#include <opencv2/videoio.hpp>

namespace fs = std::filesystem;

namespace a11ytest {

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "a11ytest-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_color_video(const fs::path& path, const std::vector<Rgb>& frames, double fps, int width, int height) {
  cv::VideoWriter writer(path.string(), cv::CAP_OPENCV_MJPEG, cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), fps,
                         cv::Size(width, height));
  if (!writer.isOpened()) throw std::runtime_error("cannot open video writer for " + path.string());
  for (const auto& c : frames) {
    cv::Mat m(height, width, CV_8UC3, cv::Scalar(c[2], c[1], c[0]));  // BGR
    writer.write(m);
  }
}

std::vector<Rgb> cut_schedule(int total, const std::vector<int>& cuts) {
  static const Rgb palette[] = {{20, 40, 200}, {230, 200, 30}, {30, 180, 60}, {200, 30, 120}, {240, 240, 240}};
  std::vector<Rgb> out;
  std::size_t shot = 0;
  for (int i = 0; i < total; ++i) {
    while (shot < cuts.size() && i >= cuts[shot]) ++shot;
    out.push_back(palette[shot % 5]);
  }
  return out;
}

std::string framedump_template() { return std::string(A11Y_FRAMEDUMP) + " {input} {fps} {outdir}"; }
fs::path stub_server_path() { return A11Y_STUB_SERVER; }
fs::path memhog_path() { return A11Y_MEMHOG; }
fs::path cli_path() { return A11Y_CLI; }
fs::path data_dir() { return A11Y_DATA_DIR; }

// ---------------------------------------------------------------------------

a11y::Luv luv_oracle(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  // sRGB companding and the IEC 61966-2-1 matrix, D65 white.
  auto lin = [](std::uint8_t c8) -> long double {
    const long double c = c8 / 255.0L;
    if (c <= 0.04045L) return c / 12.92L;
    return std::pow((c + 0.055L) / 1.055L, 2.4L);
  };
  const long double r = lin(r8), g = lin(g8), b = lin(b8);
  const long double X = 0.4124L * r + 0.3576L * g + 0.1805L * b;
  const long double Y = 0.2126L * r + 0.7152L * g + 0.0722L * b;
  const long double Z = 0.0193L * r + 0.1192L * g + 0.9505L * b;
  const long double Xn = 0.95047L, Yn = 1.0L, Zn = 1.08883L;

  const long double t = Y / Yn;
  const long double delta = 6.0L / 29.0L;
  const long double L = t > delta * delta * delta ? 116.0L * std::cbrt(t) - 16.0L
                                                  : std::pow(29.0L / 3.0L, 3.0L) * t;
  a11y::Luv out;
  out.L = static_cast<double>(L);
  const long double den = X + 15.0L * Y + 3.0L * Z;
  if (den == 0.0L) return out;
  const long double denN = Xn + 15.0L * Yn + 3.0L * Zn;
  out.u = static_cast<double>(13.0L * L * (4.0L * X / den - 4.0L * Xn / denN));
  out.v = static_cast<double>(13.0L * L * (9.0L * Y / den - 9.0L * Yn / denN));
  return out;
}

namespace {

bool is_subsequence(const std::vector<std::string>& sub, const std::vector<std::string>& seq) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < seq.size() && j < sub.size(); ++i) {
    if (seq[i] == sub[j]) ++j;
  }
  return j == sub.size();
}

}  // namespace

std::size_t lcs_exhaustive(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const auto& s = a.size() <= b.size() ? a : b;
  const auto& l = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (unsigned mask = 0; mask < (1u << s.size()); ++mask) {
    std::vector<std::string> sub;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(s[i]);
    }
    if (sub.size() > best && is_subsequence(sub, l)) best = sub.size();
  }
  return best;
}

std::pair<int, int> meteor_exhaustive(const std::vector<std::string>& c, const std::vector<std::string>& r) {
  auto match = [&](std::size_t i, std::size_t j) {
    return c[i] == r[j] || a11y::porter_stem(c[i]) == a11y::porter_stem(r[j]);
  };
  int best_m = 0;
  int best_ch = 0;
  std::vector<int> link(c.size(), -1);
  std::vector<bool> used(r.size(), false);

  auto score = [&] {
    int m = 0, ch = 0;
    int prev_c = -2, prev_r = -2;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (link[i] < 0) continue;
      ++m;
      if (!(static_cast<int>(i) == prev_c + 1 && link[i] == prev_r + 1)) ++ch;
      prev_c = static_cast<int>(i);
      prev_r = link[i];
    }
    if (m > best_m || (m == best_m && ch < best_ch)) {
      best_m = m;
      best_ch = ch;
    }
  };

  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == c.size()) {
      score();
      return;
    }
    link[i] = -1;
    self(self, i + 1);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (used[j] || !match(i, j)) continue;
      used[j] = true;
      link[i] = static_cast<int>(j);
      self(self, i + 1);
      link[i] = -1;
      used[j] = false;
    }
  };
  rec(rec, 0);
  return {best_m, best_ch};
}

std::vector<double> cider_oracle(const std::vector<std::vector<std::string>>& cands,
                                 const std::vector<std::vector<std::string>>& refs) {
  using Gram = std::vector<std::string>;
  const std::size_t N = refs.size();
  std::vector<double> out(cands.size(), 0.0);
  for (int n = 1; n <= 4; ++n) {
    auto grams_of = [n](const std::vector<std::string>& doc) {
      std::vector<Gram> g;
      for (std::size_t i = 0; i + n <= doc.size(); ++i) g.emplace_back(doc.begin() + i, doc.begin() + i + n);
      return g;
    };
    // vocabulary over candidates and references
    std::set<Gram> vocab_set;
    for (const auto& d : cands)
      for (auto& g : grams_of(d)) vocab_set.insert(g);
    for (const auto& d : refs)
      for (auto& g : grams_of(d)) vocab_set.insert(g);
    const std::vector<Gram> vocab(vocab_set.begin(), vocab_set.end());

    std::vector<long double> idf(vocab.size());
    for (std::size_t k = 0; k < vocab.size(); ++k) {
      std::size_t df = 0;
      for (const auto& d : refs) {
        const auto g = grams_of(d);
        if (std::find(g.begin(), g.end(), vocab[k]) != g.end()) ++df;
      }
      idf[k] = std::log(static_cast<long double>(N) / static_cast<long double>(std::max<std::size_t>(df, 1)));
    }
    auto dense = [&](const std::vector<std::string>& doc) {
      const auto g = grams_of(doc);
      std::vector<long double> v(vocab.size(), 0.0L);
      for (std::size_t k = 0; k < vocab.size(); ++k) {
        v[k] = static_cast<long double>(std::count(g.begin(), g.end(), vocab[k])) * idf[k];
      }
      return v;
    };
    for (std::size_t i = 0; i < cands.size(); ++i) {
      const auto a = dense(cands[i]);
      const auto b = dense(refs[i]);
      long double dot = 0, na = 0, nb = 0;
      for (std::size_t k = 0; k < vocab.size(); ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
      }
      long double cos = (na == 0 || nb == 0) ? 0.0L : dot / std::sqrt(na * nb);
      cos = std::clamp(cos, 0.0L, 1.0L);
      out[i] += static_cast<double>(cos) / 4.0;
    }
  }
  return out;
}

std::vector<std::string> random_tokens(std::mt19937& rng, const std::vector<std::string>& vocab, int min_len,
                                       int max_len) {
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::vector<std::string> out(static_cast<std::size_t>(len(rng)));
  for (auto& t : out) t = vocab[pick(rng)];
  return out;
}

}  // namespace a11ytest
