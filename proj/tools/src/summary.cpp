#include "shapebo/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace shapebo {

double percentile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("percentile of an empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    for (;;) {
        const auto c = line.find(',');
        out.push_back(line.substr(0, c));
        if (c == std::string_view::npos) return out;
        line.remove_prefix(c + 1);
    }
}

double to_double(std::string_view s, const std::string& where) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw std::runtime_error(where + ": bad number '" + std::string(s) + "'");
    }
    return v;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    Index column(const std::string& name, const std::string& file) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::runtime_error(file + ": missing column '" + name + "'");
        return it - header.begin();
    }
};

Table read_csv(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(p.string() + ": empty file");
    for (auto f : split(line)) t.header.emplace_back(f);
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        const auto fields = split(line);
        if (fields.size() != t.header.size()) {
            throw std::runtime_error(p.string() + ":" + std::to_string(n) + ": expected " +
                                     std::to_string(t.header.size()) + " fields");
        }
        t.rows.emplace_back(fields.begin(), fields.end());
    }
    return t;
}

// iteration -> one value per seed
using ByIteration = std::map<std::size_t, std::vector<double>>;

ByIteration incumbent_values(const std::filesystem::path& p) {
    const Table t = read_csv(p);
    const std::string file = p.string();
    const Index it = t.column("iteration", file);
    const Index val = t.column("incumbent_value", file);
    ByIteration out;
    for (const auto& r : t.rows) {
        if (r[static_cast<std::size_t>(val)].empty()) continue;
        const auto iter = static_cast<std::size_t>(to_double(r[static_cast<std::size_t>(it)], file));
        out[iter].push_back(to_double(r[static_cast<std::size_t>(val)], file));
    }
    if (out.empty()) throw std::runtime_error(file + ": no incumbent values");
    return out;
}

ByIteration interval_widths(const std::filesystem::path& p) {
    ByIteration out;
    if (!std::filesystem::exists(p)) return out;
    const Table t = read_csv(p);
    const std::string file = p.string();
    const Index it = t.column("iteration", file);
    const Index lo = t.column("lower95", file);
    const Index hi = t.column("upper95", file);
    for (const auto& r : t.rows) {
        const auto iter = static_cast<std::size_t>(to_double(r[static_cast<std::size_t>(it)], file));
        out[iter].push_back(to_double(r[static_cast<std::size_t>(hi)], file) -
                            to_double(r[static_cast<std::size_t>(lo)], file));
    }
    return out;
}

ArmSummary summarize_arm(const ByIteration& values, const ByIteration& widths) {
    ArmSummary s;
    for (const auto& [iter, v] : values) {
        s.iteration.push_back(iter);
        s.n_seeds.push_back(v.size());
        double sum = 0.0;
        for (double x : v) sum += x;
        s.mean.push_back(sum / static_cast<double>(v.size()));
        s.p2_5.push_back(percentile(v, 0.025));
        s.p25.push_back(percentile(v, 0.25));
        s.median.push_back(percentile(v, 0.5));
        s.p75.push_back(percentile(v, 0.75));
        s.p97_5.push_back(percentile(v, 0.975));
        if (!widths.empty()) {
            const auto w = widths.find(iter);
            s.width_median.push_back(w == widths.end() ? std::nan("") : percentile(w->second, 0.5));
        }
    }
    return s;
}

void write_rows(std::ostream& out, const char* arm, const ArmSummary& s, bool widths) {
    for (std::size_t i = 0; i < s.iteration.size(); ++i) {
        out << arm << ',' << s.iteration[i] << ',' << s.n_seeds[i] << ',' << format_double(s.mean[i]) << ','
            << format_double(s.p2_5[i]) << ',' << format_double(s.p25[i]) << ',' << format_double(s.median[i]) << ','
            << format_double(s.p75[i]) << ',' << format_double(s.p97_5[i]);
        if (widths) out << ',' << (i < s.width_median.size() ? format_double(s.width_median[i]) : "");
        out << '\n';
    }
}

void report_arm(std::ostream& out, const char* arm, const ArmSummary& s) {
    const std::size_t last = s.iteration.size() - 1;
    out << arm << ": final iteration " << s.iteration[last] << ", " << s.n_seeds[last] << " seeds, median "
        << format_double(s.median[last]) << ", IQR " << format_double(s.p75[last] - s.p25[last]) << ", mean "
        << format_double(s.mean[last]) << ", 95% band [" << format_double(s.p2_5[last]) << ", "
        << format_double(s.p97_5[last]) << "]";
    if (!s.width_median.empty()) {
        out << ", median interval width " << format_double(s.width_median[last]);
    }
    out << '\n';
}

}  // namespace

Summary summarize(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
    Summary out;
    out.constrained = summarize_arm(incumbent_values(dir / "trace_constrained.csv"),
                                    interval_widths(dir / "incumbent_constrained.csv"));
    out.unconstrained = summarize_arm(incumbent_values(dir / "trace_unconstrained.csv"),
                                      interval_widths(dir / "incumbent_unconstrained.csv"));

    const auto& c = out.constrained;
    const auto& u = out.unconstrained;
    for (std::size_t i = 0; i < c.iteration.size() && !out.first_dominance; ++i) {
        const auto j = std::find(u.iteration.begin(), u.iteration.end(), c.iteration[i]);
        if (j != u.iteration.end() && c.median[i] < u.median[static_cast<std::size_t>(j - u.iteration.begin())]) {
            out.first_dominance = c.iteration[i];
        }
    }

    const bool widths = !c.width_median.empty() && !u.width_median.empty();
    std::ofstream csv(dir / "summary.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + (dir / "summary.csv").string());
    csv << "arm,iteration,n_seeds,mean,p2_5,p25,median,p75,p97_5" << (widths ? ",width_median" : "") << '\n';
    write_rows(csv, "constrained", c, widths);
    write_rows(csv, "unconstrained", u, widths);

    std::ostringstream rep;
    rep << "Incumbent posterior expected value across seeds\n";
    report_arm(rep, "constrained", c);
    report_arm(rep, "unconstrained", u);
    if (out.first_dominance) {
        rep << "constrained median first falls strictly below unconstrained at iteration " << *out.first_dominance
            << '\n';
    } else {
        rep << "no dominance: the constrained median is never strictly below the unconstrained median\n";
    }
    out.report = rep.str();
    std::ofstream txt(dir / "report.txt", std::ios::binary);
    txt << out.report;
    if (!csv || !txt) throw std::runtime_error("write failed in " + dir.string());
    return out;
}

}  // namespace shapebo
