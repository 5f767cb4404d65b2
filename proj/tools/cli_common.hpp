#pragma once

#include "cg/cg_dynamics.hpp"
#include "cg/potentials.hpp"
#include "cg/sde.hpp"

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cgcli {

struct OptionSpec {
    std::string key;
    std::string fallback; ///< default value; "" means unset
    std::string help;
};

class Run;

/// One leaf subcommand, e.g. {"nn force", ...} for `cgchain nn force`.
struct Command {
    std::string path;
    std::string help;
    std::vector<OptionSpec> options;
    std::function<void(Run&)> body;
};

/// Options shared by every command: out, svg, svg_x, svg_y.
std::vector<OptionSpec> output_options(const std::string& default_out);

/// Resolved key=value configuration of one invocation. Precedence: defaults,
/// then the --config file, then command-line flags, then CG_SEED for `seed`.
class Run {
public:
    Run(std::string program, std::string command, std::vector<std::pair<std::string, std::string>> resolved);

    const std::string& program() const { return program_; }
    const std::string& command() const { return command_; }
    const std::vector<std::pair<std::string, std::string>>& resolved() const { return resolved_; }

    bool has(const std::string& key) const;
    std::string str(const std::string& key) const;
    double num(const std::string& key) const;
    /// Non-negative integer; accepts forms like 2e8.
    std::uint64_t count(const std::string& key) const;
    bool flag(const std::string& key) const;
    /// "v", "v1,v2,..." or "lo:hi:n" (n points, ends included).
    std::vector<double> grid(const std::string& key) const;
    std::optional<double> optional_num(const std::string& key) const;

private:
    const std::string& raw(const std::string& key) const;

    std::string program_;
    std::string command_;
    std::vector<std::pair<std::string, std::string>> resolved_;
    std::map<std::string, std::string> values_;
};

/// Parses key=value lines ('#' comments, blank lines allowed).
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

/// Builds the CLI11 tree, resolves the configuration and runs the command.
/// Exit codes: 0 success, 2 configuration error, 3 numerical failure.
int run_cli(int argc, char** argv, const std::string& program, const std::string& description,
            const std::vector<Command>& commands);

/// CSV with '#' lines echoing the resolved configuration and one header row.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const Run& run, const std::vector<std::string>& columns,
              const std::vector<std::pair<std::string, std::string>>& extra_comments = {});
    void row(const std::vector<double>& values);
    void row(const std::vector<std::string>& cells);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    std::size_t columns_;
};

std::string format_number(double v);

struct CsvTable {
    std::vector<std::pair<std::string, std::string>> comments; ///< key=value comment lines
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;
    double number(std::size_t row, std::size_t col) const;
    std::optional<std::string> comment(const std::string& key) const;
};
CsvTable read_csv(const std::string& path);

/// Polyline plot of two CSV columns (a new line starts whenever x decreases).
/// The points are exactly the values stored in the CSV.
void write_svg(const std::string& csv_path, const std::string& svg_path, const std::string& x_column = "",
               const std::string& y_column = "");

/// Writes the SVG for a finished CSV when the run asked for one.
void maybe_svg(const Run& run, const std::string& csv_path);

/// "k=5,separable=1" into system parameters.
cg::Params parse_params(const std::string& text);

/// "below:t", "above:t", "near:c1/c2/...:r"; period applies to near.
cg::Region parse_region(const std::string& text, std::optional<double> period = std::nullopt);

void write_table(const std::string& path, const Run& run, const cg::CoefficientTable& t);
cg::CoefficientTable read_table(const std::string& path);

} // namespace cgcli
