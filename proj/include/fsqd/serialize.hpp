#pragma once

#include <string>
#include <vector>

#include "fsqd/circuit.hpp"
#include "fsqd/mpo.hpp"
#include "fsqd/mps.hpp"

namespace fsqd {

// Binary formats are versioned and little-endian; all round-trips are exact
// at the byte level for the stored doubles.

void save_mps(const std::string& path, const MPS& s);
MPS load_mps(const std::string& path);

void save_mpo(const std::string& path, const MPO& m);
MPO load_mpo(const std::string& path);

void save_circuit(const std::string& path, const BrickwallCircuit& c);
BrickwallCircuit load_circuit(const std::string& path);

// Text forms use %.17g so parsed doubles reproduce the original bits.
std::string circuit_to_text(const BrickwallCircuit& c);
BrickwallCircuit circuit_from_text(const std::string& text);
std::string mps_to_text(const MPS& s);

// Shared low-level helpers for run artifacts.
std::string fmt_g17(double v);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
void write_doubles(const std::string& path, const std::vector<double>& values);
std::vector<double> read_doubles(const std::string& path);

}  // namespace fsqd
