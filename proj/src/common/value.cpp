#include "ctirag/common/value.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ctirag {

namespace {

std::string format_double(double d) {
    if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 1e15) {
        std::ostringstream os;
        os << static_cast<long long>(d) << ".0";
        return os.str();
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), d);
    return std::string(buf, res.ptr);
}

int type_rank(const Value& v) {
    // Mixed-type ordering: lists, nodes, edges, strings, booleans, numbers, null.
    if (v.is_list()) return 0;
    if (v.is_node()) return 1;
    if (v.is_edge()) return 2;
    if (v.is_string()) return 3;
    if (v.is_bool()) return 4;
    if (v.is_number()) return 5;
    return 6;
}

}  // namespace

std::string to_display(const Value& v) {
    if (v.is_null()) return "null";
    if (v.is_bool()) return v.as_bool() ? "true" : "false";
    if (v.is_int()) return std::to_string(v.as_int());
    if (v.is_double()) return format_double(std::get<double>(v.data));
    if (v.is_string()) return v.as_string();
    if (v.is_node()) return v.as_node().str();
    if (v.is_edge()) return v.as_edge().str();
    std::string out;
    for (const auto& item : v.as_list()) {
        if (!out.empty()) out += ", ";
        out += to_display(item);
    }
    return out;
}

std::string to_literal(const Value& v) {
    if (v.is_string()) {
        std::string out = "'";
        for (char c : v.as_string()) {
            if (c == '\'' || c == '\\') out += '\\';
            if (c == '\n') {
                out += "\\n";
                continue;
            }
            out += c;
        }
        return out + "'";
    }
    if (v.is_list()) {
        std::string out = "[";
        bool first = true;
        for (const auto& item : v.as_list()) {
            if (!first) out += ", ";
            first = false;
            out += to_literal(item);
        }
        return out + "]";
    }
    return to_display(v);
}

int compare_values(const Value& a, const Value& b) {
    const int ra = type_rank(a);
    const int rb = type_rank(b);
    if (ra != rb) return ra < rb ? -1 : 1;
    if (a.is_number()) {
        const double x = a.as_number(), y = b.as_number();
        return x < y ? -1 : (x > y ? 1 : 0);
    }
    if (a.is_string()) return a.as_string().compare(b.as_string()) < 0 ? -1 : (a.as_string() == b.as_string() ? 0 : 1);
    if (a.is_bool()) return static_cast<int>(a.as_bool()) - static_cast<int>(b.as_bool());
    if (a.is_node()) return a.as_node() < b.as_node() ? -1 : (a.as_node() == b.as_node() ? 0 : 1);
    if (a.is_edge()) return a.as_edge() < b.as_edge() ? -1 : (a.as_edge() == b.as_edge() ? 0 : 1);
    if (a.is_list()) {
        const auto& la = a.as_list();
        const auto& lb = b.as_list();
        for (std::size_t i = 0; i < la.size() && i < lb.size(); ++i) {
            if (int c = compare_values(la[i], lb[i]); c != 0) return c;
        }
        return la.size() < lb.size() ? -1 : (la.size() > lb.size() ? 1 : 0);
    }
    return 0;
}

bool is_null_like(const Value& v) {
    if (v.is_null()) return true;
    if (v.is_list()) {
        for (const auto& item : v.as_list()) {
            if (!is_null_like(item)) return false;
        }
        return true;
    }
    return false;
}

nlohmann::json to_json(const Value& v) {
    using nlohmann::json;
    if (v.is_null()) return nullptr;
    if (v.is_bool()) return v.as_bool();
    if (v.is_int()) return v.as_int();
    if (v.is_double()) return std::get<double>(v.data);
    if (v.is_string()) return v.as_string();
    if (v.is_node()) return json{{"$node", v.as_node().str()}};
    if (v.is_edge()) return json{{"$edge", v.as_edge().str()}};
    json arr = json::array();
    for (const auto& item : v.as_list()) arr.push_back(to_json(item));
    return arr;
}

Value value_from_json(const nlohmann::json& j) {
    if (j.is_null()) return {};
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    if (j.is_array()) {
        ValueList out;
        for (const auto& item : j) out.push_back(value_from_json(item));
        return out;
    }
    if (j.is_object()) {
        auto parse_ref = [](const std::string& s) {
            return static_cast<std::uint32_t>(std::stoul(s.substr(1)));
        };
        if (j.contains("$node")) return NodeId{parse_ref(j.at("$node").get<std::string>())};
        if (j.contains("$edge")) return EdgeId{parse_ref(j.at("$edge").get<std::string>())};
    }
    throw std::invalid_argument("unsupported JSON value: " + j.dump());
}

}  // namespace ctirag
