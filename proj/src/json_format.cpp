#include "magthermo/json_format.hpp"

#include <cmath>
#include <cstdio>

#include "magthermo/errors.hpp"

namespace magthermo {

namespace {

void write_number(std::string& out, double v) {
    if (!std::isfinite(v)) {
        out += "null";
        return;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

void write(std::string& out, const json& j, int indent, int depth) {
    const bool pretty = indent >= 0;
    auto newline = [&](int d) {
        if (!pretty) return;
        out += '\n';
        out.append(static_cast<std::size_t>(indent * d), ' ');
    };
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += ',';
            first = false;
            newline(depth + 1);
            out += json(it.key()).dump();
            out += pretty ? ": " : ":";
            write(out, it.value(), indent, depth + 1);
        }
        newline(depth);
        out += '}';
        return;
    }
    case json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        out += '[';
        bool first = true;
        for (const auto& v : j) {
            if (!first) out += ',';
            first = false;
            newline(depth + 1);
            write(out, v, indent, depth + 1);
        }
        newline(depth);
        out += ']';
        return;
    }
    case json::value_t::number_float: write_number(out, j.get<double>()); return;
    default: out += j.dump(); return;
    }
}

} // namespace

std::string dump17(const json& j, int indent) {
    std::string out;
    write(out, j, indent, 0);
    return out;
}

json to_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

std::complex<double> complex_from_json(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw SchemaError("expected a complex number as [re, im]");
}

} // namespace magthermo
