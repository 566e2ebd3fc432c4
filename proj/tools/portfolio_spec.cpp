#include "portfolio_spec.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace kelly::cli {

namespace {

using nlohmann::json;

struct Context {
    std::string origin;

    [[noreturn]] void fail(const std::string& field, const std::string& message) const {
        throw SpecError(fmt::format("{}: {}: {}", origin, field, message));
    }

    void only_keys(const json& obj, const std::string& field, std::initializer_list<const char*> allowed) const {
        const std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [key, value] : obj.items())
            if (!ok.contains(key)) fail(field.empty() ? key : field + "." + key, "unknown field");
    }

    const json& require(const json& obj, const std::string& field, const char* key) const {
        if (!obj.contains(key)) fail(field.empty() ? key : field + "." + key, "missing required field");
        return obj.at(key);
    }

    double number(const json& obj, const std::string& field, const char* key) const {
        const auto& v = require(obj, field, key);
        if (!v.is_number()) fail(field + "." + key, "must be a number");
        return v.get<double>();
    }

    std::string string(const json& obj, const std::string& field, const char* key) const {
        const auto& v = require(obj, field, key);
        if (!v.is_string()) fail(field.empty() ? key : field + "." + key, "must be a string");
        return v.get<std::string>();
    }
};

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

PriceMatrix load_samples_csv(const std::filesystem::path& path, const std::vector<std::string>& names) {
    std::ifstream in(path);
    if (!in) throw SpecError(fmt::format("{}: cannot open samples file", path.string()));
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw SpecError(fmt::format("{}: empty samples file", path.string()));
    ++line_no;
    const auto header = split_csv_line(trim(line));
    if (header != names)
        throw SpecError(fmt::format("{}:1: header must list the spec's asset names in order ({})", path.string(),
                                    fmt::join(names, ",")));
    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != names.size())
            throw SpecError(fmt::format("{}:{}: expected {} values, got {}", path.string(), line_no, names.size(),
                                        cells.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v = 0.0;
            const auto& cell = cells[c];
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v))
                throw SpecError(fmt::format("{}:{}: column {} ('{}') is not a finite number", path.string(), line_no,
                                            c + 1, cell));
            values.push_back(v);
        }
        ++rows;
    }
    PriceMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < values.size(); ++i) m.data()[i] = values[i];
    return m;
}

PortfolioSpec parse_spec(const std::string& text, const std::string& origin, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw SpecError(fmt::format("{}:{}:{}: syntax error: {}", origin, line, col, e.what()));
    }

    const Context ctx{origin};
    if (!doc.is_object()) ctx.fail("(root)", "spec must be a JSON object");
    ctx.only_keys(doc, "", {"schema_version", "assets", "dependence"});

    PortfolioSpec spec;
    spec.schema_version = ctx.string(doc, "", "schema_version");
    if (spec.schema_version != schema_version)
        ctx.fail("schema_version", fmt::format("unsupported version '{}' (expected '{}')", spec.schema_version,
                                               schema_version));

    std::string kind = "independent";
    json dependence = json::object();
    if (doc.contains("dependence")) {
        dependence = doc.at("dependence");
        if (!dependence.is_object()) ctx.fail("dependence", "must be an object");
        kind = ctx.string(dependence, "dependence", "kind");
    }
    const bool samples = kind == "samples";

    const auto& assets = ctx.require(doc, "", "assets");
    if (!assets.is_array() || assets.empty()) ctx.fail("assets", "must be a non-empty array");
    for (std::size_t i = 0; i < assets.size(); ++i) {
        const std::string field = fmt::format("assets[{}]", i);
        const auto& a = assets[i];
        if (!a.is_object()) ctx.fail(field, "must be an object");
        ctx.only_keys(a, field, {"name", "family", "x0", "mu", "sigma"});
        const auto name = ctx.string(a, field, "name");
        if (name.empty()) ctx.fail(field + ".name", "must not be empty");
        for (const auto& other : spec.names)
            if (other == name) ctx.fail(field + ".name", fmt::format("duplicate asset name '{}'", name));
        spec.names.push_back(name);

        AssetModel m;
        m.x0 = ctx.number(a, field, "x0");
        if (!(m.x0 > 0.0)) ctx.fail(field + ".x0", "must be > 0");
        if (!samples || a.contains("family")) {
            const auto family = ctx.string(a, field, "family");
            if (family == "lognormal")
                m.family = Family::LogNormal;
            else if (family == "gaussian")
                m.family = Family::Gaussian;
            else
                ctx.fail(field + ".family", fmt::format("must be \"lognormal\" or \"gaussian\", got \"{}\"", family));
        }
        if (!samples || a.contains("mu")) {
            m.mu = ctx.number(a, field, "mu");
            if (!std::isfinite(m.mu)) ctx.fail(field + ".mu", "must be finite");
        }
        if (!samples || a.contains("sigma")) {
            m.sigma = ctx.number(a, field, "sigma");
            if (!(m.sigma > 0.0)) ctx.fail(field + ".sigma", "must be > 0");
        }
        spec.model.assets.push_back(m);
    }

    if (kind == "independent") {
        ctx.only_keys(dependence, "dependence", {"kind"});
        spec.model.dependence = Independent{};
    } else if (kind == "bivariate") {
        ctx.only_keys(dependence, "dependence", {"kind", "rho"});
        const double rho = ctx.number(dependence, "dependence", "rho");
        if (!(rho >= -1.0 && rho <= 1.0)) ctx.fail("dependence.rho", "must lie in [-1, 1]");
        if (spec.model.size() != 2) ctx.fail("dependence.kind", "bivariate dependence needs exactly 2 assets");
        for (std::size_t i = 0; i < spec.model.size(); ++i)
            if (spec.model.assets[i].family != Family::LogNormal)
                ctx.fail(fmt::format("assets[{}].family", i), "bivariate dependence needs lognormal assets");
        spec.model.dependence = BivariateLogNormal{rho};
    } else if (samples) {
        ctx.only_keys(dependence, "dependence", {"kind", "path"});
        const std::filesystem::path p = ctx.string(dependence, "dependence", "path");
        const auto resolved = p.is_absolute() ? p : base_dir / p;
        auto draws = load_samples_csv(resolved, spec.names);
        if (draws.rows() < 2) ctx.fail("dependence.path", fmt::format("need at least 2 samples, got {}", draws.rows()));
        spec.model.dependence = EmpiricalSamples{std::move(draws)};
    } else {
        ctx.fail("dependence.kind", fmt::format("must be independent, bivariate or samples, got \"{}\"", kind));
    }

    try {
        validate(spec.model);
    } catch (const ValidationError& e) {
        ctx.fail("(model)", e.what());
    }
    return spec;
}

PortfolioSpec load_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SpecError(fmt::format("{}: cannot open spec file", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_spec(buf.str(), path.string(), path.parent_path());
}

}  // namespace kelly::cli
