#pragma once

// Report serialization: CSV tables, trial records, text tables and the SVG
// learning-curve plot. Numbers are written in shortest round-trip form so
// identical inputs give byte-identical files.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "palacs/data.hpp"
#include "palacs/error.hpp"
#include "palacs/harness.hpp"

namespace palacs::io {

inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw ConsistencyError("cannot format number");
    return std::string(buf, ptr);
}

inline std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// Column sets. Changing any of these is a schema change.
inline constexpr const char* kLearningCurvesHeader = "dataset,strategy,step,mean_error,std_error";
inline constexpr const char* kPhaseTableHeader = "dataset,strategy,phase,first_step,last_step,mean_error,win_ratio";
inline constexpr const char* kSamplingHeader = "dataset,strategy,class,label,proportion";
inline constexpr const char* kRecordsHeader = "dataset,strategy,trial,step,class,error";

// Steps and classes are written one-based.
inline void write_learning_curves(std::ostream& out, const ExperimentReport& rep) {
    out << kLearningCurvesHeader << '\n';
    for (const auto& s : rep.strategies) {
        for (std::size_t i = 0; i < rep.budget; ++i) {
            out << rep.dataset << ',' << s.strategy << ',' << i + 1 << ',' << format_double(s.curve_mean[i]) << ','
                << format_double(s.curve_std[i]) << '\n';
        }
    }
}

inline void write_phase_table(std::ostream& out, const ExperimentReport& rep) {
    out << kPhaseTableHeader << '\n';
    const auto ranges = phase_ranges(rep.budget);
    for (const auto& s : rep.strategies) {
        for (std::size_t p = 0; p < 4; ++p) {
            out << rep.dataset << ',' << s.strategy << ',' << p + 1 << ',' << ranges[p].first + 1 << ','
                << ranges[p].last << ',' << format_double(s.phases[p].mean_error) << ','
                << format_double(s.phases[p].win_ratio) << '\n';
        }
    }
}

inline void write_sampling_proportions(std::ostream& out, const ExperimentReport& rep,
                                       const std::vector<std::string>& class_names) {
    out << kSamplingHeader << '\n';
    for (const auto& s : rep.strategies) {
        for (std::size_t y = 0; y < rep.num_classes; ++y) {
            out << rep.dataset << ',' << s.strategy << ',' << y + 1 << ','
                << (y < class_names.size() ? class_names[y] : std::to_string(y + 1)) << ','
                << format_double(s.sampling_proportions[y]) << '\n';
        }
    }
}

inline void write_records(std::ostream& out, const std::vector<TrialRecord>& records) {
    out << kRecordsHeader << '\n';
    for (const auto& r : records) {
        for (std::size_t i = 0; i < r.errors.size(); ++i) {
            out << r.dataset << ',' << r.strategy << ',' << r.trial_id << ',' << i + 1 << ',' << r.choices[i] + 1 << ','
                << format_double(r.errors[i]) << '\n';
        }
    }
}

inline std::vector<TrialRecord> read_records(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kRecordsHeader) throw DatasetError("records file has an unexpected header");

    std::vector<TrialRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        auto bad = [&] { return DatasetError("records file line " + std::to_string(line_no) + " is malformed"); };
        if (cells.size() != 6) throw bad();
        long trial = 0, step = 0, cls = 0;
        double err = 0.0;
        auto parse_int = [&](const std::string& s, long& v) {
            const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size()) throw bad();
        };
        parse_int(cells[2], trial);
        parse_int(cells[3], step);
        parse_int(cells[4], cls);
        if (auto v = detail::parse_number(cells[5])) {
            err = *v;
        } else {
            throw bad();
        }
        if (cls < 1 || step < 1 || err < 0.0 || err > 1.0) throw bad();

        if (records.empty() || records.back().strategy != cells[1] || records.back().trial_id != trial ||
            records.back().dataset != cells[0]) {
            if (step != 1) throw bad();
            records.push_back(TrialRecord{cells[1], cells[0], static_cast<int>(trial), {}, {}});
        }
        auto& r = records.back();
        if (static_cast<std::size_t>(step) != r.errors.size() + 1) throw bad();
        r.errors.push_back(err);
        r.choices.push_back(static_cast<ClassIndex>(cls - 1));
    }
    return records;
}

// Text rendering of the phase and sampling tables. '*' marks the best phase
// error and the best win ratio in each phase.
inline std::string render_tables(const ExperimentReport& rep) {
    std::ostringstream out;
    out << "dataset: " << rep.dataset << "   trials: " << rep.trials << "   budget: " << rep.budget << "\n\n";

    std::size_t name_w = 8;
    for (const auto& s : rep.strategies) name_w = std::max(name_w, s.strategy.size());
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.append(w - s.size(), ' ');
        return s;
    };

    std::array<double, 4> best_err{}, best_win{};
    for (std::size_t p = 0; p < 4; ++p) {
        best_err[p] = std::numeric_limits<double>::infinity();
        best_win[p] = -1.0;
        for (const auto& s : rep.strategies) {
            best_err[p] = std::min(best_err[p], s.phases[p].mean_error);
            best_win[p] = std::max(best_win[p], s.phases[p].win_ratio);
        }
    }

    out << pad("strategy", name_w);
    for (int p = 1; p <= 4; ++p) out << "  " << pad("phase " + std::to_string(p), 18);
    out << '\n' << pad("", name_w);
    for (int p = 1; p <= 4; ++p) out << "  " << pad("error    win", 18);
    out << '\n';
    for (const auto& s : rep.strategies) {
        out << pad(s.strategy, name_w);
        for (std::size_t p = 0; p < 4; ++p) {
            const auto& ph = s.phases[p];
            std::string cell = fixed(ph.mean_error, 4) + (ph.mean_error == best_err[p] ? "*" : " ") + "  " +
                               fixed(100.0 * ph.win_ratio, 2) + "%" + (ph.win_ratio == best_win[p] ? "*" : "");
            out << "  " << pad(cell, 18);
        }
        out << '\n';
    }

    out << "\nfinal sampling proportions (%)\n";
    for (const auto& s : rep.strategies) {
        out << pad(s.strategy, name_w) << "  ";
        for (std::size_t y = 0; y < s.sampling_proportions.size(); ++y) {
            if (y > 0) out << ',';
            char buf[16];
            std::snprintf(buf, sizeof buf, "%02.0f", 100.0 * s.sampling_proportions[y]);
            out << buf;
        }
        out << '\n';
    }
    // drop the padding at line ends
    std::string text = out.str(), trimmed;
    for (char c : text) {
        if (c == '\n')
            while (!trimmed.empty() && trimmed.back() == ' ') trimmed.pop_back();
        trimmed.push_back(c);
    }
    return trimmed;
}

// Mean error line plus a +/- one standard deviation band per strategy.
inline std::string render_svg(const ExperimentReport& rep) {
    static const char* kColors[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    constexpr double W = 640, H = 420, L = 60, R = 150, T = 40, B = 50;
    const double pw = W - L - R, ph = H - T - B;

    double y_max = 0.0;
    for (const auto& s : rep.strategies)
        for (std::size_t i = 0; i < rep.budget; ++i) y_max = std::max(y_max, s.curve_mean[i] + s.curve_std[i]);
    y_max = std::clamp(std::ceil(y_max * 10.0) / 10.0, 0.1, 1.0);

    const double span = rep.budget > 1 ? static_cast<double>(rep.budget - 1) : 1.0;
    auto sx = [&](std::size_t step) { return L + pw * static_cast<double>(step - 1) / span; };
    auto sy = [&](double v) { return T + ph * (1.0 - std::clamp(v, 0.0, y_max) / y_max); };
    auto pt = [](double x, double y) { return fixed(x, 2) + "," + fixed(y, 2); };

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<g id=\"panel-" << rep.dataset << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<text x=\"" << L + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << rep.dataset
        << "</text>\n"
        << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    // x ticks at the phase boundaries
    std::vector<std::size_t> xticks = {1};
    for (const auto& r : phase_ranges(rep.budget))
        if (r.last > 0 && r.last != xticks.back()) xticks.push_back(r.last);
    for (std::size_t t : xticks) {
        out << "<line x1=\"" << fixed(sx(t), 2) << "\" y1=\"" << T + ph << "\" x2=\"" << fixed(sx(t), 2) << "\" y2=\""
            << T + ph + 5 << "\" stroke=\"black\"/>\n"
            << "<text class=\"xtick\" x=\"" << fixed(sx(t), 2) << "\" y=\"" << T + ph + 18
            << "\" text-anchor=\"middle\">" << t << "</text>\n";
    }
    for (int i = 0; i <= 4; ++i) {
        const double v = y_max * i / 4.0;
        out << "<text class=\"ytick\" x=\"" << L - 6 << "\" y=\"" << fixed(sy(v) + 4, 2) << "\" text-anchor=\"end\">"
            << fixed(v, 3) << "</text>\n";
    }
    out << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">acquired instances</text>\n"
        << "<text x=\"16\" y=\"" << T + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << T + ph / 2
        << ")\">test error</text>\n";

    for (std::size_t k = 0; k < rep.strategies.size(); ++k) {
        const auto& s = rep.strategies[k];
        const char* color = kColors[k % std::size(kColors)];
        out << "<polygon class=\"band\" data-strategy=\"" << s.strategy << "\" fill=\"" << color
            << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < rep.budget; ++i) out << (i ? " " : "") << pt(sx(i + 1), sy(s.curve_mean[i] + s.curve_std[i]));
        for (std::size_t i = rep.budget; i-- > 0;) out << ' ' << pt(sx(i + 1), sy(s.curve_mean[i] - s.curve_std[i]));
        out << "\"/>\n";
    }
    for (std::size_t k = 0; k < rep.strategies.size(); ++k) {
        const auto& s = rep.strategies[k];
        const char* color = kColors[k % std::size(kColors)];
        out << "<polyline class=\"mean\" data-strategy=\"" << s.strategy << "\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < rep.budget; ++i) out << (i ? " " : "") << pt(sx(i + 1), sy(s.curve_mean[i]));
        out << "\"/>\n";
        const double ly = T + 12 + 18.0 * static_cast<double>(k);
        out << "<line x1=\"" << L + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 32 << "\" y2=\"" << ly
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << L + pw + 38 << "\" y=\"" << ly + 4 << "\">" << s.strategy << "</text>\n";
    }
    out << "</g>\n</svg>\n";
    return out.str();
}

}  // namespace palacs::io
