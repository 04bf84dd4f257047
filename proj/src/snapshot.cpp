#include "bcm/snapshot.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace bcm {

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, end);
}

namespace {

double parse_double(const std::string& token) {
    double v = 0;
    auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || end != token.data() + token.size())
        throw std::runtime_error("snapshot: bad number '" + token + "'");
    return v;
}

}  // namespace

void write_snapshot(std::ostream& os, const SpinConfiguration& eta, const Parameters& p) {
    const int L = eta.side();
    os << L << ' ' << format_double(p.J) << ' ' << format_double(p.lambda) << ' '
       << format_double(p.h) << '\n';
    for (int y = L; y >= 1; --y) {
        for (int x = 1; x <= L; ++x) os << spin_char(eta.at({x, y}));
        os << '\n';
    }
}

std::string snapshot_string(const SpinConfiguration& eta, const Parameters& p) {
    std::ostringstream os;
    write_snapshot(os, eta, p);
    return os.str();
}

Snapshot read_snapshot(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("snapshot: missing header");
    std::istringstream header(line);
    std::string L_tok, J_tok, l_tok, h_tok, extra;
    if (!(header >> L_tok >> J_tok >> l_tok >> h_tok) || (header >> extra))
        throw std::runtime_error("snapshot: header must be 'L J lambda h'");

    Snapshot snap;
    {
        auto [end, ec] = std::from_chars(L_tok.data(), L_tok.data() + L_tok.size(), snap.L);
        if (ec != std::errc{} || end != L_tok.data() + L_tok.size() || snap.L < 1)
            throw std::runtime_error("snapshot: bad side length '" + L_tok + "'");
    }
    snap.J = parse_double(J_tok);
    snap.lambda = parse_double(l_tok);
    snap.h = parse_double(h_tok);
    snap.config = SpinConfiguration(snap.L);

    for (int y = snap.L; y >= 1; --y) {
        if (!std::getline(is, line)) throw std::runtime_error("snapshot: missing grid row");
        if (static_cast<int>(line.size()) != snap.L)
            throw std::runtime_error("snapshot: row " + std::to_string(snap.L - y + 2) +
                                     " has wrong length");
        for (int x = 1; x <= snap.L; ++x) {
            try {
                snap.config.set({x, y}, spin_from_char(line[x - 1]));
            } catch (const std::invalid_argument& e) {
                throw std::runtime_error(std::string("snapshot: ") + e.what());
            }
        }
    }
    return snap;
}

Snapshot read_snapshot_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open snapshot " + path);
    return read_snapshot(in);
}

void write_snapshot_file(const std::string& path, const SpinConfiguration& eta,
                         const Parameters& p) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write snapshot " + path);
    write_snapshot(out, eta, p);
}

}  // namespace bcm
