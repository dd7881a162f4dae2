// Trace ingestion and windowing: day-file CSV load (one file per day, columns
// HashOwner,HashApp,HashFunction,Trigger,1..N), lossless write-back, and
// slot-aligned train/simulation splits.
#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spes/types.hpp"

namespace spes {

namespace detail {

inline void split_line(const std::string& line, std::vector<std::string_view>& out) {
  out.clear();
  const char* base = line.data();
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.emplace_back(base + start, i - start);
      start = i + 1;
    }
  }
}

inline Count parse_count(std::string_view cell, const std::string& file, std::size_t lineno) {
  Count value = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    std::ostringstream msg;
    msg << file << ":" << lineno << ": malformed invocation count '" << cell << "'";
    throw std::runtime_error(msg.str());
  }
  return value;
}

}  // namespace detail

// Loads one CSV file per day, in day order. Rows sharing a function id are
// summed per minute; the function's trigger collapses to the label with the
// most rows (ties resolved by enum order), and its owner/app pair comes from
// the first row encountered.
inline TraceDataset load_azure_csv(const std::vector<std::string>& day_files) {
  if (day_files.empty()) throw std::invalid_argument("load_azure_csv: no input files");

  struct Accum {
    FunctionMeta meta;
    std::vector<Count> counts;
    int trigger_rows[7] = {0, 0, 0, 0, 0, 0, 0};
  };
  std::map<std::string, Accum> by_id;  // ordered: deterministic iteration
  int minutes_per_day = -1;

  for (std::size_t day = 0; day < day_files.size(); ++day) {
    const std::string& file = day_files[day];
    std::ifstream in(file);
    if (!in) throw std::runtime_error("load_azure_csv: cannot open " + file);

    std::string line;
    std::vector<std::string_view> cells;
    if (!std::getline(in, line)) throw std::runtime_error("load_azure_csv: empty file " + file);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    detail::split_line(line, cells);
    if (cells.size() < 5 || cells[0] != "HashOwner" || cells[1] != "HashApp" ||
        cells[2] != "HashFunction" || cells[3] != "Trigger")
      throw std::runtime_error("load_azure_csv: " + file + ": unexpected header");
    int minutes = static_cast<int>(cells.size()) - 4;
    if (minutes_per_day == -1) {
      minutes_per_day = minutes;
    } else if (minutes != minutes_per_day) {
      std::ostringstream msg;
      msg << "load_azure_csv: " << file << ": day length " << minutes
          << " differs from earlier files (" << minutes_per_day << ")";
      throw std::runtime_error(msg.str());
    }

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      detail::split_line(line, cells);
      if (cells.size() != static_cast<std::size_t>(minutes) + 4) {
        std::ostringstream msg;
        msg << file << ":" << lineno << ": expected " << minutes + 4 << " columns, got "
            << cells.size();
        throw std::runtime_error(msg.str());
      }
      std::string fid(cells[2]);
      auto [it, inserted] = by_id.try_emplace(std::move(fid));
      Accum& acc = it->second;
      if (inserted) {
        acc.meta.owner_id = std::string(cells[0]);
        acc.meta.app_id = std::string(cells[1]);
        acc.meta.function_id = it->first;
        acc.counts.assign(static_cast<std::size_t>(minutes_per_day) * day_files.size(), 0);
      }
      ++acc.trigger_rows[static_cast<int>(parse_trigger(cells[3]))];
      std::size_t base = day * static_cast<std::size_t>(minutes_per_day);
      for (int m = 0; m < minutes; ++m) {
        Count c = detail::parse_count(cells[4 + m], file, lineno);
        acc.counts[base + m] += c;
      }
    }
  }

  TraceDataset ds;
  ds.days = static_cast<int>(day_files.size());
  ds.minutes_per_day = minutes_per_day;
  ds.metas.reserve(by_id.size());
  ds.series.reserve(by_id.size());
  for (auto& [id, acc] : by_id) {
    int best_rows = -1;
    TriggerType trig = TriggerType::Others;
    for (int t = 0; t < 7; ++t) {
      if (acc.trigger_rows[t] > best_rows) {  // > keeps the first (enum-order) label on ties
        best_rows = acc.trigger_rows[t];
        trig = static_cast<TriggerType>(t);
      }
    }
    acc.meta.trigger = trig;
    ds.metas.push_back(std::move(acc.meta));
    ds.series.push_back(InvocationSeries{id, 0, std::move(acc.counts)});
  }
  ds.finalize();
  return ds;
}

// Writes one file per day under dir, named <stem>.dNN.csv, rows in function_id
// order. load_azure_csv over the returned paths reproduces the dataset.
inline std::vector<std::string> write_trace_csv(const TraceDataset& ds, const std::string& dir,
                                                const std::string& stem = "trace") {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> paths;
  for (int day = 0; day < ds.days; ++day) {
    std::ostringstream name;
    name << stem << ".d" << (day + 1 < 10 ? "0" : "") << day + 1 << ".csv";
    fs::path path = fs::path(dir) / name.str();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path.string());
    out << "HashOwner,HashApp,HashFunction,Trigger";
    for (int m = 1; m <= ds.minutes_per_day; ++m) out << ',' << m;
    out << '\n';
    std::size_t base = static_cast<std::size_t>(day) * ds.minutes_per_day;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const FunctionMeta& meta = ds.metas[i];
      out << meta.owner_id << ',' << meta.app_id << ',' << meta.function_id << ','
          << to_string(meta.trigger);
      const std::vector<Count>& counts = ds.series[i].counts;
      for (int m = 0; m < ds.minutes_per_day; ++m) out << ',' << counts[base + m];
      out << '\n';
    }
    paths.push_back(path.string());
  }
  return paths;
}

// Slot-aligned window [first_day, first_day + day_count) as a standalone dataset.
inline TraceDataset slice_days(const TraceDataset& ds, int first_day, int day_count) {
  if (first_day < 0 || day_count < 0 || first_day + day_count > ds.days)
    throw std::invalid_argument("slice_days: window out of range");
  TraceDataset out;
  out.days = day_count;
  out.minutes_per_day = ds.minutes_per_day;
  std::size_t begin = static_cast<std::size_t>(first_day) * ds.minutes_per_day;
  std::size_t len = static_cast<std::size_t>(day_count) * ds.minutes_per_day;
  out.metas = ds.metas;
  out.series.reserve(ds.series.size());
  for (const InvocationSeries& s : ds.series) {
    InvocationSeries w;
    w.function_id = s.function_id;
    w.origin_minute = s.origin_minute + static_cast<Slot>(begin);
    w.counts.assign(s.counts.begin() + begin, s.counts.begin() + begin + len);
    out.series.push_back(std::move(w));
  }
  out.finalize();
  return out;
}

// First train_days for training, the following sim_days for simulation. A zero
// sim_days yields an empty simulation window; trailing days beyond the two
// windows are dropped.
inline std::pair<TraceDataset, TraceDataset> split_dataset(const TraceDataset& ds, int train_days,
                                                           int sim_days) {
  if (train_days < 1) throw std::invalid_argument("split_dataset: train_days must be >= 1");
  if (sim_days < 0) throw std::invalid_argument("split_dataset: sim_days must be >= 0");
  if (train_days + sim_days > ds.days)
    throw std::invalid_argument("split_dataset: train_days + sim_days exceeds dataset days");
  return {slice_days(ds, 0, train_days), slice_days(ds, train_days, sim_days)};
}

}  // namespace spes
