#include "harvest/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace harvest {

namespace {

// Howard Hinnant's civil-date algorithms
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = s[0] == '-' ? 1 : 0;
  if (i >= s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

std::string trim(std::string s) {
  auto issp = [](unsigned char c) { return std::isspace(c); };
  while (!s.empty() && issp(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && issp(s[i])) ++i;
  return s.substr(i);
}

}  // namespace

std::int64_t parse_timestamp(const std::string& raw) {
  std::string text = trim(raw);
  if (all_digits(text)) return std::stoll(text);

  int y, mo, d, h, mi, s;
  if (std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &s) != 6 &&
      std::sscanf(text.c_str(), "%d-%d-%d %d:%d:%d", &y, &mo, &d, &h, &mi, &s) != 6)
    throw std::invalid_argument("timestamp not ISO-8601 or unix seconds: '" + text + "'");

  std::int64_t offset = 0;
  std::size_t tail = text.find_last_of("+Z");
  if (tail == std::string::npos) {
    // a '-' after the date part means a negative UTC offset
    std::size_t tpos = text.find_first_of("T ");
    std::size_t neg = text.find('-', tpos);
    if (neg != std::string::npos) tail = neg;
  }
  if (tail != std::string::npos && text[tail] != 'Z' && tail > 10) {
    int oh = 0, om = 0;
    if (std::sscanf(text.c_str() + tail + 1, "%d:%d", &oh, &om) < 1)
      throw std::invalid_argument("bad timezone offset in '" + text + "'");
    offset = 3600LL * oh + 60LL * om;
    if (text[tail] == '-') offset = -offset;
  }
  return days_from_civil(y, mo, d) * 86400LL + 3600LL * h + 60LL * mi + s - offset;
}

std::string format_iso_utc(std::int64_t t) {
  std::int64_t days = t >= 0 ? t / 86400 : (t - 86399) / 86400;
  int sod = static_cast<int>(t - days * 86400);
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                sod / 3600, (sod % 3600) / 60, sod % 60);
  return buf;
}

LoadResult load_irradiance(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  LoadResult out;
  std::string line;
  std::size_t lineno = 0;

  if (opts.layout == CsvLayout::headered) {
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    ++lineno;
    std::string h = trim(line);
    if (h != "timestamp,irradiance_uw_cm2")
      throw std::runtime_error(path + ": unexpected header '" + h + "'");
  }

  auto& samples = out.series.samples;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) continue;
    // legacy layout may be comma- or whitespace-separated
    std::size_t cut = t.find(',');
    if (cut == std::string::npos) cut = t.find_first_of(" \t");
    if (cut == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected two columns");
    std::string c0 = trim(t.substr(0, cut)), c1 = trim(t.substr(cut + 1));
    ++out.report.rows_read;

    std::int64_t ts;
    double v;
    try {
      ts = parse_timestamp(c0);
      std::size_t used = 0;
      v = std::stod(c1, &used);
      if (used != c1.size() || !std::isfinite(v)) throw std::invalid_argument(c1);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": unparseable row (" + e.what() + ")");
    }

    if (!samples.empty() && ts <= samples.back().t)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": non-monotone timestamp");
    if (v < 0.0) {
      if (opts.clamp_negative) {
        v = 0.0;
        ++out.report.negatives_clamped;
      } else {
        ++out.report.rows_rejected;
        continue;
      }
    }
    samples.push_back({ts, v});
  }

  // native period = modal spacing
  if (samples.size() >= 2) {
    std::map<std::int64_t, std::size_t> freq;
    for (std::size_t i = 1; i < samples.size(); ++i)
      ++freq[samples[i].t - samples[i - 1].t];
    std::int64_t best = 0;
    std::size_t n = 0;
    for (auto& [dt, c] : freq)
      if (c > n) {
        n = c;
        best = dt;
      }
    out.series.native_period_s = best;
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (samples[i].t - samples[i - 1].t > best) ++out.report.gaps;
  }
  return out;
}

void save_irradiance(const IrradianceSeries& s, const std::string& path) {
  std::ofstream outf(path);
  if (!outf) throw std::runtime_error("cannot write " + path);
  outf << "timestamp,irradiance_uw_cm2\n";
  char buf[64];
  for (const auto& smp : s.samples) {
    std::snprintf(buf, sizeof buf, "%.17g", smp.value);
    outf << format_iso_utc(smp.t) << ',' << buf << '\n';
  }
  if (!outf) throw std::runtime_error("write failed: " + path);
}

int WindowConfig::periods_per_day() const {
  return static_cast<int>((static_cast<std::int64_t>(active_end_h) - active_start_h) *
                          3600 / period_s);
}

void WindowConfig::validate(std::int64_t native_period_s) const {
  if (active_start_h < 0 || active_end_h > 24 || active_start_h >= active_end_h)
    throw std::invalid_argument("window: bad active hours");
  if (period_s <= 0) throw std::invalid_argument("window: period_s must be positive");
  std::int64_t span = (static_cast<std::int64_t>(active_end_h) - active_start_h) * 3600;
  if (span % period_s != 0)
    throw std::invalid_argument("window: active span is not a whole number of periods");
  if (native_period_s > 0 && period_s < native_period_s)
    throw std::invalid_argument(
        "window: period_s is finer than the data's native sampling (" +
        std::to_string(native_period_s) + " s)");
}

ResampleResult resample(const IrradianceSeries& s, const WindowConfig& w) {
  w.validate(s.native_period_s);
  const int ppd = w.periods_per_day();

  ResampleResult out;
  // (day, period) -> (sum, count)
  std::map<std::pair<std::int64_t, int>, std::pair<double, std::size_t>> bins;
  for (const auto& smp : s.samples) {
    std::int64_t local = smp.t + w.utc_offset_s;
    std::int64_t day = local >= 0 ? local / 86400 : (local - 86399) / 86400;
    std::int64_t sod = local - day * 86400;
    std::int64_t rel = sod - static_cast<std::int64_t>(w.active_start_h) * 3600;
    if (rel < 0 || rel >= static_cast<std::int64_t>(ppd) * w.period_s) {
      ++out.samples_outside_window;
      continue;
    }
    auto& bin = bins[{day, static_cast<int>(rel / w.period_s)}];
    bin.first += smp.value;
    bin.second += 1;
    ++out.samples_used;
  }

  // walk bins day by day, splitting at missing periods
  ResampledSeq cur;
  std::int64_t cur_day = INT64_MIN;
  int expect_period = -1;
  auto flush = [&]() {
    if (!cur.values.empty()) out.sequences.push_back(std::move(cur));
    cur = ResampledSeq{};
  };
  std::map<std::int64_t, std::size_t> day_counts;
  for (auto& [key, agg] : bins) {
    auto [day, period] = key;
    ++day_counts[day];
    bool contiguous = day == cur_day && period == expect_period;
    if (!contiguous) {
      flush();
      cur.day_start = day * 86400 + static_cast<std::int64_t>(w.active_start_h) * 3600 -
                      w.utc_offset_s;
      cur.first_period = period;
      cur_day = day;
    }
    cur.values.push_back(agg.first / static_cast<double>(agg.second));
    expect_period = period + 1;
  }
  flush();

  for (auto& [day, cnt] : day_counts)
    out.periods_missing += static_cast<std::size_t>(ppd) - cnt;
  return out;
}

std::vector<std::vector<double>> ResampleResult::observation_sequences() const {
  std::vector<std::vector<double>> out;
  out.reserve(sequences.size());
  for (const auto& s : sequences) out.push_back(s.values);
  return out;
}

}  // namespace harvest
