#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "common.hpp"
#include "whitebilevel/error.hpp"
#include "whitebilevel/harness.hpp"

namespace wb::harness {

namespace {

struct PlotPoint {
    std::string kernel;
    std::string metric;
    LossTag loss = LossTag::White;
    double bsnr = 0.0;
    double mean = 0.0;
    double std_dev = 0.0;
    std::size_t count = 0;
};

const char* loss_label(LossTag t) {
    switch (t) {
        case LossTag::Mse: return "MSE (S)";
        case LossTag::Gauss: return "GAUSS (SS)";
        case LossTag::White: return "WHITE (U)";
    }
    return "?";
}

const char* loss_color(LossTag t) {
    switch (t) {
        case LossTag::Mse: return "#1f77b4";
        case LossTag::Gauss: return "#2ca02c";
        case LossTag::White: return "#d62728";
    }
    return "#000000";
}

/// First comment line of a result file, without the leading "# ".
std::string provenance_line(const fs::path& path) {
    const std::string text = detail::read_file(path);
    if (text.rfind("# ", 0) != 0) return "provenance unknown";
    return text.substr(2, text.find('\n') - 2);
}

std::vector<PlotPoint> read_plot_data(const fs::path& path) {
    const auto t = detail::read_csv(path);
    const std::string what = path.string();
    std::vector<PlotPoint> out;
    for (const auto& row : t.rows) {
        PlotPoint p;
        p.kernel = row[t.column("kernel")];
        p.metric = row[t.column("metric")];
        try {
            p.loss = parse_loss_tag(row[t.column("loss")]);
        } catch (const ConfigError& e) {
            throw IoError(what + ": " + e.what());
        }
        p.bsnr = detail::parse_double(row[t.column("bsnr")], what);
        p.mean = detail::parse_double(row[t.column("mean")], what);
        p.std_dev = detail::parse_double(row[t.column("std")], what);
        p.count = static_cast<std::size_t>(detail::parse_double(row[t.column("count")], what));
        out.push_back(p);
    }
    return out;
}

std::string render_svg(const std::vector<PlotPoint>& points, const std::string& kernel, const std::string& metric,
                       const std::string& provenance) {
    constexpr double W = 640, H = 400, L = 70, R = 150, T = 40, B = 50;
    const double pw = W - L - R, ph = H - T - B;

    double xmin = HUGE_VAL, xmax = -HUGE_VAL, ymin = HUGE_VAL, ymax = -HUGE_VAL;
    for (const auto& p : points) {
        xmin = std::min(xmin, p.bsnr);
        xmax = std::max(xmax, p.bsnr);
        ymin = std::min(ymin, p.mean - p.std_dev);
        ymax = std::max(ymax, p.mean + p.std_dev);
    }
    if (xmax <= xmin) {
        xmin -= 1.0;
        xmax += 1.0;
    }
    const double pad = ymax > ymin ? 0.05 * (ymax - ymin) : (metric == "ssim" ? 0.01 : 0.5);
    ymin -= pad;
    ymax += pad;
    auto sx = [&](double x) { return detail::fmt_fixed(L + (x - xmin) / (xmax - xmin) * pw, 2); };
    auto sy = [&](double y) { return detail::fmt_fixed(T + (ymax - y) / (ymax - ymin) * ph, 2); };
    const int decimals = metric == "ssim" ? 3 : 2;
    const std::string metric_label = metric == "ssim" ? "SSIM" : "PSNR (dB)";

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<!-- " << provenance << " -->\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
        << W << " " << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << L + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">Average " << metric_label
        << " vs BSNR, " << kernel << " blur (band: mean &#177; 1 std)</text>\n";

    // axes, ticks, grid
    svg << "<g stroke=\"#000\" stroke-width=\"1\">\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw << "\" y2=\"" << T + ph << "\"/>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph << "\"/>\n";
    svg << "</g>\n";
    std::set<double> xs;
    for (const auto& p : points) xs.insert(p.bsnr);
    for (double x : xs) {
        svg << "<line x1=\"" << sx(x) << "\" y1=\"" << T + ph << "\" x2=\"" << sx(x) << "\" y2=\"" << T + ph + 5
            << "\" stroke=\"#000\"/>\n";
        svg << "<text x=\"" << sx(x) << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">" << detail::fmt(x, 6)
            << "</text>\n";
    }
    for (int i = 0; i <= 5; ++i) {
        const double y = ymin + (ymax - ymin) * i / 5.0;
        svg << "<line x1=\"" << L << "\" y1=\"" << sy(y) << "\" x2=\"" << L + pw << "\" y2=\"" << sy(y)
            << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << L - 6 << "\" y=\"" << sy(y) << "\" text-anchor=\"end\" dominant-baseline=\"middle\">"
            << detail::fmt_fixed(y, decimals) << "</text>\n";
    }
    svg << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">BSNR (dB)</text>\n";
    svg << "<text transform=\"translate(18," << T + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << metric_label << "</text>\n";

    int legend_row = 0;
    for (LossTag loss : {LossTag::Mse, LossTag::Gauss, LossTag::White}) {
        std::vector<PlotPoint> curve;
        for (const auto& p : points)
            if (p.loss == loss) curve.push_back(p);
        if (curve.empty()) continue;
        std::sort(curve.begin(), curve.end(), [](const auto& a, const auto& b) { return a.bsnr < b.bsnr; });
        const char* color = loss_color(loss);

        svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
        for (const auto& p : curve) svg << sx(p.bsnr) << "," << sy(p.mean + p.std_dev) << " ";
        for (auto it = curve.rbegin(); it != curve.rend(); ++it) svg << sx(it->bsnr) << "," << sy(it->mean - it->std_dev) << " ";
        svg << "\"/>\n";
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto& p : curve) svg << sx(p.bsnr) << "," << sy(p.mean) << " ";
        svg << "\"/>\n";
        for (const auto& p : curve)
            svg << "<circle cx=\"" << sx(p.bsnr) << "\" cy=\"" << sy(p.mean) << "\" r=\"3\" fill=\"" << color << "\"/>\n";

        const double ly = T + 10 + 20 * legend_row++;
        svg << "<line x1=\"" << L + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 40 << "\" y2=\"" << ly
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << L + pw + 46 << "\" y=\"" << ly << "\" dominant-baseline=\"middle\">" << loss_label(loss)
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace

double percent_gap(double value, double max_value) { return 100.0 * (max_value - value) / max_value; }

std::vector<fs::path> render_plots(const fs::path& plot_data_csv, const fs::path& out_dir) {
    const auto points = read_plot_data(plot_data_csv);
    if (points.empty()) throw IoError(plot_data_csv.string() + " has no data rows");
    const std::string prov = provenance_line(plot_data_csv);

    std::vector<std::pair<std::string, std::string>> panels;
    for (const auto& p : points) {
        const auto key = std::make_pair(p.kernel, p.metric);
        if (std::find(panels.begin(), panels.end(), key) == panels.end()) panels.push_back(key);
    }
    std::vector<fs::path> written;
    for (const auto& [kernel, metric] : panels) {
        std::vector<PlotPoint> sel;
        for (const auto& p : points)
            if (p.kernel == kernel && p.metric == metric) sel.push_back(p);
        const fs::path path = out_dir / (metric + "_" + kernel + ".svg");
        detail::write_file(path, render_svg(sel, kernel, metric, prov));
        written.push_back(path);
    }
    return written;
}

void cmd_report(const fs::path& result_dir) {
    const fs::path agg_path = result_dir / "aggregate.csv";
    const fs::path rec_path = result_dir / "records.csv";
    if (!fs::exists(agg_path)) throw IoError("no aggregate.csv in " + result_dir.string() + " (run batch first)");
    if (!fs::exists(rec_path)) throw IoError("no records.csv in " + result_dir.string() + " (run batch first)");
    const auto aggregates = read_aggregate_csv(agg_path);
    const auto records = read_records_csv(rec_path);
    if (aggregates.empty()) throw IoError(agg_path.string() + " has no data rows");
    const std::string prov = provenance_line(agg_path);
    const fs::path out_dir = result_dir / "report";

    // Plot data: kernel in order of appearance, metric, loss, ascending BSNR.
    std::vector<std::string> kernels;
    for (const auto& a : aggregates)
        if (std::find(kernels.begin(), kernels.end(), a.kernel) == kernels.end()) kernels.push_back(a.kernel);
    std::ostringstream plot;
    plot << "# " << prov << "\nkernel,metric,loss,bsnr,mean,std,count\n";
    for (const auto& kernel : kernels) {
        for (const char* metric : {"psnr", "ssim"}) {
            for (LossTag loss : {LossTag::Mse, LossTag::Gauss, LossTag::White}) {
                std::vector<Aggregate> rows;
                for (const auto& a : aggregates)
                    if (a.kernel == kernel && a.loss == loss) rows.push_back(a);
                std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.bsnr < b.bsnr; });
                for (const auto& a : rows) {
                    const bool is_psnr = std::string(metric) == "psnr";
                    plot << kernel << "," << metric << "," << to_string(loss) << "," << detail::fmt(a.bsnr) << ","
                         << detail::fmt(is_psnr ? a.psnr_mean : a.ssim_mean) << ","
                         << detail::fmt(is_psnr ? a.psnr_std : a.ssim_std) << "," << a.count << "\n";
                }
            }
        }
    }
    const fs::path plot_path = out_dir / "plot_data.csv";
    detail::write_file(plot_path, plot.str());
    render_plots(plot_path, out_dir);

    // Per-image table with gaps to the best loss of each row.
    using Key = std::tuple<std::string, std::string, double>;
    std::vector<Key> keys;
    std::map<Key, std::map<LossTag, const ExperimentRecord*>> rows;
    std::set<LossTag> present;
    for (const auto& r : records) {
        const Key key{r.image, r.kernel, r.bsnr};
        if (!rows.count(key)) keys.push_back(key);
        rows[key][r.loss] = &r;
        present.insert(r.loss);
    }
    std::ostringstream csv;
    std::ostringstream txt;
    csv << "# " << prov << "\nimage,kernel,bsnr,loss,psnr,psnr_gap_pct,ssim,ssim_gap_pct\n";
    txt << "# " << prov << "\n";
    txt << "# value (gap to row maximum in %), * marks the row maximum\n";
    txt << std::left << std::setw(10) << "image" << std::setw(10) << "kernel" << std::setw(7) << "bsnr";
    for (LossTag loss : present) txt << std::setw(22) << (std::string(loss_label(loss)) + " PSNR");
    for (LossTag loss : present) txt << std::setw(22) << (std::string(loss_label(loss)) + " SSIM");
    txt << "\n";

    auto cell = [](const std::optional<double>& v, double best, int decimals) {
        if (!v) return std::string("-");
        std::string s = detail::fmt_fixed(*v, decimals) + " (" + detail::fmt_fixed(percent_gap(*v, best), 1) + "%)";
        if (*v == best) s += "*";
        return s;
    };
    for (const auto& key : keys) {
        const auto& by_loss = rows.at(key);
        double best_psnr = -HUGE_VAL, best_ssim = -HUGE_VAL;
        for (const auto& [loss, r] : by_loss) {
            if (r->psnr) best_psnr = std::max(best_psnr, *r->psnr);
            if (r->ssim) best_ssim = std::max(best_ssim, *r->ssim);
        }
        const auto& [image, kernel, bsnr] = key;
        txt << std::left << std::setw(10) << image << std::setw(10) << kernel << std::setw(7) << detail::fmt(bsnr, 6);
        for (LossTag loss : present) {
            const auto it = by_loss.find(loss);
            txt << std::setw(22) << (it == by_loss.end() ? "-" : cell(it->second->psnr, best_psnr, 2));
        }
        for (LossTag loss : present) {
            const auto it = by_loss.find(loss);
            txt << std::setw(22) << (it == by_loss.end() ? "-" : cell(it->second->ssim, best_ssim, 4));
        }
        txt << "\n";
        for (const auto& [loss, r] : by_loss) {
            csv << image << "," << kernel << "," << detail::fmt(bsnr) << "," << to_string(loss) << ",";
            if (r->psnr) csv << detail::fmt(*r->psnr) << "," << detail::fmt(percent_gap(*r->psnr, best_psnr));
            else csv << ",";
            csv << ",";
            if (r->ssim) csv << detail::fmt(*r->ssim) << "," << detail::fmt(percent_gap(*r->ssim, best_ssim));
            else csv << ",";
            csv << "\n";
        }
    }
    detail::write_file(out_dir / "table.csv", csv.str());
    detail::write_file(out_dir / "table.txt", txt.str());
}

}  // namespace wb::harness
