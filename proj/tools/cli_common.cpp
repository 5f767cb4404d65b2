#include "cli_common.hpp"

#include "cg/error.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

namespace cgcli {

using cg::ConfigError;
using cg::NumericalError;

namespace {

std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double to_number(const std::string& key, const std::string& text)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ConfigError("option '" + key + "' expects a number, got '" + text + "'");
    }
    if (used != text.size()) throw ConfigError("option '" + key + "' expects a number, got '" + text + "'");
    return v;
}

} // namespace

std::vector<OptionSpec> output_options(const std::string& default_out)
{
    return {{"out", default_out, "output CSV path"},
            {"svg", "false", "also write an SVG line plot next to the CSV"},
            {"svg_x", "", "column plotted on the x axis (default: first)"},
            {"svg_y", "", "column plotted on the y axis (default: second)"}};
}

Run::Run(std::string program, std::string command, std::vector<std::pair<std::string, std::string>> resolved)
    : program_(std::move(program)), command_(std::move(command)), resolved_(std::move(resolved))
{
    for (const auto& [k, v] : resolved_) values_[k] = v;
}

bool Run::has(const std::string& key) const
{
    const auto it = values_.find(key);
    return it != values_.end() && !it->second.empty();
}

const std::string& Run::raw(const std::string& key) const
{
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::logic_error("option '" + key + "' is not declared for " + command_);
    return it->second;
}

std::string Run::str(const std::string& key) const { return raw(key); }

double Run::num(const std::string& key) const
{
    const std::string& v = raw(key);
    if (v.empty()) throw ConfigError("option '" + key + "' is required");
    return to_number(key, v);
}

std::optional<double> Run::optional_num(const std::string& key) const
{
    if (!has(key)) return std::nullopt;
    return num(key);
}

std::uint64_t Run::count(const std::string& key) const
{
    const double v = num(key);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1.8e19)
        throw ConfigError("option '" + key + "' expects a non-negative integer, got '" + raw(key) + "'");
    return static_cast<std::uint64_t>(v);
}

bool Run::flag(const std::string& key) const
{
    std::string v = raw(key);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off" || v.empty()) return false;
    throw ConfigError("option '" + key + "' expects true or false, got '" + raw(key) + "'");
}

std::vector<double> Run::grid(const std::string& key) const
{
    const std::string& v = raw(key);
    if (v.empty()) throw ConfigError("option '" + key + "' is required");
    if (v.find(':') != std::string::npos) {
        const auto parts = split(v, ':');
        if (parts.size() != 3) throw ConfigError("option '" + key + "' range must be lo:hi:n");
        const double lo = to_number(key, parts[0]), hi = to_number(key, parts[1]);
        const double n = to_number(key, parts[2]);
        if (!(n >= 1.0) || n != std::floor(n)) throw ConfigError("option '" + key + "' needs an integer point count");
        if (n == 1.0) return {lo};
        std::vector<double> out;
        for (int i = 0; i < static_cast<int>(n); ++i) out.push_back(lo + (hi - lo) * i / (n - 1.0));
        return out;
    }
    std::vector<double> out;
    for (const auto& p : split(v, ',')) out.push_back(to_number(key, p));
    return out;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        out.emplace_back(key, trim(t.substr(eq + 1)));
    }
    return out;
}

int run_cli(int argc, char** argv, const std::string& program, const std::string& description,
            const std::vector<Command>& commands)
{
    CLI::App app(description, program);
    app.require_subcommand(1);
    std::string config_path;
    struct Leaf {
        const Command* command;
        CLI::App* app;
        std::map<std::string, std::string> flags;
        std::map<std::string, CLI::Option*> handles;
    };
    std::vector<Leaf> leaves;
    leaves.reserve(commands.size());
    for (const Command& c : commands) {
        CLI::App* parent = &app;
        const auto words = split(c.path, ' ');
        for (std::size_t i = 0; i < words.size(); ++i) {
            CLI::App* next = nullptr;
            for (CLI::App* sub : parent->get_subcommands([](CLI::App*) { return true; }))
                if (sub->get_name() == words[i]) next = sub;
            if (!next) {
                next = parent->add_subcommand(words[i], i + 1 == words.size() ? c.help : "");
                if (i + 1 < words.size()) next->require_subcommand(1);
            }
            parent = next;
        }
        Leaf leaf{&c, parent, {}, {}};
        leaves.push_back(std::move(leaf));
    }
    for (Leaf& leaf : leaves) {
        leaf.app->add_option("--config", config_path, "key=value configuration file");
        for (const OptionSpec& o : leaf.command->options) {
            std::string help = o.help;
            if (!o.fallback.empty()) help += " [" + o.fallback + "]";
            leaf.handles[o.key] = leaf.app->add_option("--" + o.key, leaf.flags[o.key], help);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const Leaf* chosen = nullptr;
    for (const Leaf& leaf : leaves)
        if (leaf.app->parsed()) chosen = &leaf;
    if (!chosen) {
        std::cerr << program << ": no command given\n";
        return 2;
    }
    try {
        std::vector<std::pair<std::string, std::string>> resolved;
        std::map<std::string, std::size_t> index;
        for (const OptionSpec& o : chosen->command->options) {
            index[o.key] = resolved.size();
            resolved.emplace_back(o.key, o.fallback);
        }
        if (!config_path.empty()) {
            for (const auto& [k, v] : read_config_file(config_path)) {
                const auto it = index.find(k);
                if (it == index.end())
                    throw ConfigError("unknown key '" + k + "' in " + config_path + " for '" + chosen->command->path +
                                      "'");
                resolved[it->second].second = v;
            }
        }
        for (const auto& [k, h] : chosen->handles)
            if (h->count() > 0) resolved[index.at(k)].second = chosen->flags.at(k);
        if (const char* env = std::getenv("CG_SEED"); env && index.count("seed")) resolved[index.at("seed")].second = env;
        Run run(program, chosen->command->path, std::move(resolved));
        chosen->command->body(run);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << program << ": configuration error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << program << ": numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << program << ": configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << program << ": failure: " << e.what() << "\n";
        return 3;
    }
}

std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const Run& run, const std::vector<std::string>& columns,
                     const std::vector<std::pair<std::string, std::string>>& extra_comments)
    : path_(path), out_(path), columns_(columns.size())
{
    if (!out_) throw ConfigError("cannot write '" + path + "'");
    out_ << "# command=" << run.program() << " " << run.command() << "\n";
    for (const auto& [k, v] : run.resolved()) out_ << "# " << k << "=" << v << "\n";
    for (const auto& [k, v] : extra_comments) out_ << "# " << k << "=" << v << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
}

void CsvWriter::row(const std::vector<double>& values)
{
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    row(cells);
}

void CsvWriter::row(const std::vector<std::string>& cells)
{
    if (cells.size() != columns_) throw std::logic_error("CSV row has the wrong number of cells");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
    out_.flush();
}

std::size_t CsvTable::column(const std::string& name) const
{
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ConfigError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

double CsvTable::number(std::size_t row, std::size_t col) const { return to_number(columns.at(col), rows.at(row).at(col)); }

std::optional<std::string> CsvTable::comment(const std::string& key) const
{
    for (const auto& [k, v] : comments)
        if (k == key) return v;
    return std::nullopt;
}

CsvTable read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    CsvTable t;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string body = trim(line.substr(1));
            const auto eq = body.find('=');
            if (eq != std::string::npos) t.comments.emplace_back(body.substr(0, eq), body.substr(eq + 1));
            continue;
        }
        auto cells = split(line, ',');
        if (!header) {
            t.columns = std::move(cells);
            header = true;
            continue;
        }
        if (cells.size() != t.columns.size()) throw ConfigError(path + ": row with the wrong number of cells");
        t.rows.push_back(std::move(cells));
    }
    if (!header) throw ConfigError(path + ": no header row");
    return t;
}

void write_svg(const std::string& csv_path, const std::string& svg_path, const std::string& x_column,
               const std::string& y_column)
{
    const CsvTable t = read_csv(csv_path);
    if (t.columns.size() < 2) throw ConfigError("SVG needs a CSV with at least two columns");
    const std::size_t cx = x_column.empty() ? 0 : t.column(x_column);
    const std::size_t cy = y_column.empty() ? 1 : t.column(y_column);
    std::vector<std::vector<std::pair<double, double>>> lines(1);
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const double x = t.number(r, cx), y = t.number(r, cy);
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        if (!lines.back().empty() && x < lines.back().back().first) lines.emplace_back();
        lines.back().emplace_back(x, y);
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    if (!(xmax >= xmin)) throw ConfigError("SVG: no finite points in '" + csv_path + "'");
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    const double W = 640, H = 400, L = 70, R = 20, T = 20, B = 50;
    auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
    std::ofstream out(svg_path);
    if (!out) throw ConfigError("cannot write '" + svg_path + "'");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text x=\"" << (W + L - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << t.columns[cx]
        << "</text>\n";
    out << "<text x=\"15\" y=\"" << (H - B + T) / 2 << "\" transform=\"rotate(-90 15 " << (H - B + T) / 2
        << ")\" text-anchor=\"middle\">" << t.columns[cy] << "</text>\n";
    out << "<text x=\"" << L << "\" y=\"" << H - B + 18 << "\">" << format_number(xmin) << "</text>\n";
    out << "<text x=\"" << W - R << "\" y=\"" << H - B + 18 << "\" text-anchor=\"end\">" << format_number(xmax)
        << "</text>\n";
    out << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" text-anchor=\"end\">" << format_number(ymin)
        << "</text>\n";
    out << "<text x=\"" << L - 4 << "\" y=\"" << T + 10 << "\" text-anchor=\"end\">" << format_number(ymax)
        << "</text>\n";
    for (const auto& line : lines) {
        if (line.empty()) continue;
        out << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
        for (std::size_t i = 0; i < line.size(); ++i)
            out << (i ? " " : "") << format_number(px(line[i].first)) << "," << format_number(py(line[i].second));
        out << "\"/>\n";
    }
    out << "</svg>\n";
}

void maybe_svg(const Run& run, const std::string& csv_path)
{
    if (!run.flag("svg")) return;
    std::string svg = csv_path;
    if (svg.size() > 4 && svg.substr(svg.size() - 4) == ".csv") svg.resize(svg.size() - 4);
    write_svg(csv_path, svg + ".svg", run.str("svg_x"), run.str("svg_y"));
}

cg::Params parse_params(const std::string& text)
{
    cg::Params p;
    if (trim(text).empty()) return p;
    for (const auto& item : split(text, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("system parameter '" + item + "' must be name=value");
        const std::string k = trim(item.substr(0, eq));
        p[k] = to_number(k, trim(item.substr(eq + 1)));
    }
    return p;
}

cg::Region parse_region(const std::string& text, std::optional<double> period)
{
    const auto parts = split(text, ':');
    if (parts.size() == 2 && parts[0] == "below") return cg::Region::below(to_number("region", parts[1]));
    if (parts.size() == 2 && parts[0] == "above") return cg::Region::above(to_number("region", parts[1]));
    if (parts.size() == 3 && parts[0] == "near") {
        std::vector<double> c;
        for (const auto& s : split(parts[1], '/')) c.push_back(to_number("region", s));
        return cg::Region::near(c, to_number("region", parts[2]), period);
    }
    throw ConfigError("region '" + text + "' must be below:t, above:t or near:c1/c2:r");
}

void write_table(const std::string& path, const Run& run, const cg::CoefficientTable& t)
{
    std::vector<std::pair<std::string, std::string>> meta{
        {"table.beta", format_number(t.beta)},
        {"table.lo", format_number(t.lo)},
        {"table.width", format_number(t.width)},
        {"table.period", t.period ? format_number(*t.period) : ""},
        {"table.system", t.system},
        {"table.rc", t.rc},
        {"table.provenance", cg::to_string(t.provenance)}};
    CsvWriter w(path, run,
                {"z", "A", "A_prime", "b", "sigma2", "sigma", "count", "mask", "A_prime_hw", "b_hw", "sigma2_hw",
                 "b_direct", "b_direct_hw"},
                meta);
    const bool direct = t.b_direct.size() == t.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < t.size(); ++i)
        w.row({t.z[i], t.A[i], t.A_prime[i], t.b[i], t.sigma2[i], std::sqrt(std::max(0.0, t.sigma2[i])), t.count[i],
               t.mask[i] ? 1.0 : 0.0, t.A_prime_hw[i], t.b_hw[i], t.sigma2_hw[i], direct ? t.b_direct[i] : nan,
               direct ? t.b_direct_hw[i] : nan});
}

cg::CoefficientTable read_table(const std::string& path)
{
    const CsvTable csv = read_csv(path);
    cg::CoefficientTable t;
    auto meta = [&](const std::string& k) {
        const auto v = csv.comment("table." + k);
        if (!v) throw ConfigError(path + " is not a coefficient table (missing table." + k + ")");
        return *v;
    };
    t.beta = to_number("table.beta", meta("beta"));
    t.lo = to_number("table.lo", meta("lo"));
    t.width = to_number("table.width", meta("width"));
    if (const std::string p = meta("period"); !p.empty()) t.period = to_number("table.period", p);
    t.system = meta("system");
    t.rc = meta("rc");
    t.provenance = cg::parse_path(meta("provenance"));
    const std::size_t n = csv.rows.size();
    const std::vector<std::pair<std::string, std::vector<double>*>> cols{
        {"z", &t.z},           {"A", &t.A},         {"A_prime", &t.A_prime},     {"b", &t.b},
        {"sigma2", &t.sigma2}, {"count", &t.count}, {"A_prime_hw", &t.A_prime_hw}, {"b_hw", &t.b_hw},
        {"sigma2_hw", &t.sigma2_hw}};
    for (const auto& [name, dest] : cols) {
        const std::size_t c = csv.column(name);
        for (std::size_t r = 0; r < n; ++r) dest->push_back(csv.number(r, c));
    }
    const std::size_t cm = csv.column("mask");
    for (std::size_t r = 0; r < n; ++r) t.mask.push_back(csv.number(r, cm) != 0.0);
    const std::size_t cd = csv.column("b_direct"), cdh = csv.column("b_direct_hw");
    if (n > 0 && !std::isnan(csv.number(0, cd))) {
        for (std::size_t r = 0; r < n; ++r) {
            t.b_direct.push_back(csv.number(r, cd));
            t.b_direct_hw.push_back(csv.number(r, cdh));
        }
    }
    t.validate();
    return t;
}

} // namespace cgcli
