#include "dmps/experiment.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace dmps {

std::vector<SummaryCell> summarize(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw InvalidInputError("summarize: no result rows");
  using Key = std::tuple<std::string, std::string, Index>;
  std::map<Key, std::size_t> slot;
  std::vector<SummaryCell> cells;
  std::vector<std::vector<double>> costs;
  std::vector<double> walls;
  for (const auto& r : rows) {
    const Key key{r.dataset, r.sampler, r.m_particles};
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, cells.size()).first;
      SummaryCell c;
      c.dataset = r.dataset;
      c.sampler = r.sampler;
      c.m_particles = r.m_particles;
      cells.push_back(c);
      costs.emplace_back();
      walls.push_back(0.0);
    }
    const std::size_t k = it->second;
    if (r.ok() && std::isfinite(r.ot_cost)) {
      costs[k].push_back(r.ot_cost);
      walls[k] += r.wall_time_seconds;
    } else {
      ++cells[k].failures;
    }
  }
  for (std::size_t k = 0; k < cells.size(); ++k) {
    SummaryCell& c = cells[k];
    const auto& v = costs[k];
    c.n = static_cast<Index>(v.size());
    if (v.empty()) {
      c.mean = c.stderr_mean = c.mean_wall_time = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    c.mean = sum / static_cast<double>(v.size());
    c.mean_wall_time = walls[k] / static_cast<double>(v.size());
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - c.mean) * (x - c.mean);
      const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
      c.stderr_mean = sd / std::sqrt(static_cast<double>(v.size()));
    }
  }
  return cells;
}

std::string format_summary_table(const std::vector<SummaryCell>& cells) {
  std::vector<std::vector<std::string>> table;
  table.push_back({"dataset", "sampler", "M", "n", "mean", "stderr", "failures", "wall_s"});
  for (const auto& c : cells) {
    std::ostringstream mean, se, wall;
    mean << std::setprecision(4) << c.mean;
    se << "+- " << std::setprecision(2) << c.stderr_mean;
    wall << std::fixed << std::setprecision(2) << c.mean_wall_time;
    table.push_back({c.dataset, c.sampler, std::to_string(c.m_particles), std::to_string(c.n),
                     mean.str(), se.str(), std::to_string(c.failures), wall.str()});
  }
  std::vector<std::size_t> width(table.front().size(), 0);
  for (const auto& row : table) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream os;
  for (const auto& row : table) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << "  ";
      // text columns left-aligned, numbers right-aligned
      if (i < 2) {
        os << std::left << std::setw(static_cast<int>(width[i])) << row[i];
      } else {
        os << std::right << std::setw(static_cast<int>(width[i])) << row[i];
      }
    }
    os << '\n';
  }
  return os.str();
}

std::vector<SummaryCell> emit_summary(const std::vector<ResultRow>& rows,
                                      const std::filesystem::path& dir) {
  const auto cells = summarize(rows);
  std::filesystem::create_directories(dir);
  {
    std::ofstream txt(dir / "summary.txt");
    if (!txt) throw IoError("cannot write summary.txt in " + dir.string());
    txt << format_summary_table(cells);
  }
  std::ofstream csv(dir / "summary.csv");
  if (!csv) throw IoError("cannot write summary.csv in " + dir.string());
  csv.precision(std::numeric_limits<double>::max_digits10);
  csv << "dataset,sampler,m_particles,n,mean,stderr,failures,mean_wall_time_seconds\n";
  for (const auto& c : cells) {
    csv << c.dataset << ',' << c.sampler << ',' << c.m_particles << ',' << c.n << ',' << c.mean
        << ',' << c.stderr_mean << ',' << c.failures << ',' << c.mean_wall_time << '\n';
  }
  if (!csv) throw IoError("failed writing summary.csv in " + dir.string());
  return cells;
}

}  // namespace dmps
