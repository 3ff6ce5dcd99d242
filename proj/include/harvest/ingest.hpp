#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace harvest {

struct IrradianceSample {
  std::int64_t t;  // unix seconds, UTC
  double value;    // uW/cm^2, >= 0
};

struct IrradianceSeries {
  std::vector<IrradianceSample> samples;  // strictly increasing timestamps
  std::int64_t native_period_s = 0;       // modal sample spacing
};

enum class CsvLayout {
  headered,  // "timestamp,irradiance_uw_cm2" header, ISO-8601 or unix seconds
  legacy     // two columns, no header
};

struct LoadOptions {
  CsvLayout layout = CsvLayout::headered;
  bool clamp_negative = false;  // false: reject negative rows
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t rows_rejected = 0;
  std::size_t negatives_clamped = 0;
  std::size_t gaps = 0;  // spacings larger than the native period
};

struct LoadResult {
  IrradianceSeries series;
  LoadReport report;
};

LoadResult load_irradiance(const std::string& path, const LoadOptions& opts = {});

// headered layout, ISO-8601 UTC timestamps, values at full double precision
// (loading the file back reproduces the series bit-for-bit)
void save_irradiance(const IrradianceSeries& s, const std::string& path);

// timestamp helpers: ISO-8601 ("2024-06-01T07:00:00Z", optional +hh:mm
// offset) or raw unix seconds
std::int64_t parse_timestamp(const std::string& text);
std::string format_iso_utc(std::int64_t t);

// Daylight windowing: samples are bucketed per local day into fixed periods
// covering [active_start_h, active_end_h). Fixed UTC offset only — no
// timezone database.
struct WindowConfig {
  int active_start_h = 7;
  int active_end_h = 17;
  int period_s = 300;
  std::int64_t utc_offset_s = 0;

  int periods_per_day() const;
  void validate(std::int64_t native_period_s) const;
};

// one contiguous run of periods inside a single day
struct ResampledSeq {
  std::int64_t day_start;  // unix seconds of the day's active-window start
  int first_period;        // offset of values[0] within the window
  std::vector<double> values;
};

struct ResampleResult {
  std::vector<ResampledSeq> sequences;
  std::size_t periods_missing = 0;  // in-window periods with no samples
  std::size_t samples_used = 0;
  std::size_t samples_outside_window = 0;

  std::vector<std::vector<double>> observation_sequences() const;
};

ResampleResult resample(const IrradianceSeries& s, const WindowConfig& w);

}  // namespace harvest
