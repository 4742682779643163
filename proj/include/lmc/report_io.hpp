#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmc/connectivity.hpp"

namespace lmc {

inline constexpr const char* kToolVersion = "lmc 1.0.0";
inline constexpr int kBarrierSchemaVersion = 1;
inline constexpr int kDiagnosticsSchemaVersion = 1;
inline constexpr int kTheorySchemaVersion = 1;

/// Doubles are printed with %.17g so parsing the text recovers the exact
/// bits; identical inputs therefore produce byte-identical files.
std::string format_double(double x);

/// CSV columns: lambda,train_loss,test_loss,test_acc,calibrated_test_loss,beta
std::string barrier_csv(const BarrierCurve& curve);
/// Sidecar with the barrier scalars and the per-lambda temperature fits.
std::string barrier_json(const BarrierCurve& curve,
                         const std::string& perm_mode,
                         const std::vector<std::string>& perm_paths);

std::string diagnostics_json(const DiagnosticsReport& report);

/// FNV-1a 64-bit over a canonical key=value dump; hex string.
std::uint64_t fnv1a64(const std::string& text);
std::string hash_hex(std::uint64_t h);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace lmc
