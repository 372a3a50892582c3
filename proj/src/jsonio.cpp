#include "ate/jsonio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ate/errors.hpp"

namespace ate {

JsonValue JsonValue::boolean(bool b) {
    JsonValue v;
    v.kind_ = Kind::Bool;
    v.bool_ = b;
    return v;
}

JsonValue JsonValue::number(double x) {
    JsonValue v;
    v.kind_ = Kind::Number;
    v.num_ = x;
    return v;
}

JsonValue JsonValue::integer(long long x) {
    JsonValue v;
    v.kind_ = Kind::Int;
    v.int_ = x;
    return v;
}

JsonValue JsonValue::string(std::string s) {
    JsonValue v;
    v.kind_ = Kind::String;
    v.str_ = std::move(s);
    return v;
}

JsonValue JsonValue::array() {
    JsonValue v;
    v.kind_ = Kind::Array;
    return v;
}

JsonValue JsonValue::object() {
    JsonValue v;
    v.kind_ = Kind::Object;
    return v;
}

void JsonValue::push_back(JsonValue v) { items_.push_back(std::move(v)); }

JsonValue& JsonValue::set(const std::string& key, JsonValue v) {
    fields_.emplace_back(key, std::move(v));
    return fields_.back().second;
}

namespace {

void escape_into(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

void indent_into(std::string& out, int indent, int depth) {
    if (indent <= 0) return;
    out += '\n';
    out.append(static_cast<size_t>(indent) * depth, ' ');
}

}  // namespace

void JsonValue::write(std::string& out, int indent, int depth) const {
    char buf[40];
    switch (kind_) {
        case Kind::Null:
            out += "null";
            break;
        case Kind::Bool:
            out += bool_ ? "true" : "false";
            break;
        case Kind::Int:
            std::snprintf(buf, sizeof(buf), "%lld", int_);
            out += buf;
            break;
        case Kind::Number:
            if (std::isfinite(num_)) {
                std::snprintf(buf, sizeof(buf), "%.17g", num_);
                out += buf;
            } else {
                out += "null";  // JSON has no NaN/inf
            }
            break;
        case Kind::String:
            escape_into(out, str_);
            break;
        case Kind::Array: {
            out += '[';
            for (size_t i = 0; i < items_.size(); ++i) {
                if (i) out += ',';
                indent_into(out, indent, depth + 1);
                items_[i].write(out, indent, depth + 1);
            }
            if (!items_.empty()) indent_into(out, indent, depth);
            out += ']';
            break;
        }
        case Kind::Object: {
            out += '{';
            for (size_t i = 0; i < fields_.size(); ++i) {
                if (i) out += ',';
                indent_into(out, indent, depth + 1);
                escape_into(out, fields_[i].first);
                out += indent > 0 ? ": " : ":";
                fields_[i].second.write(out, indent, depth + 1);
            }
            if (!fields_.empty()) indent_into(out, indent, depth);
            out += '}';
            break;
        }
    }
}

std::string JsonValue::dump(int indent) const {
    std::string out;
    write(out, indent, 0);
    out += '\n';
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << content;
}

}  // namespace ate
