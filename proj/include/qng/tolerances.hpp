#pragma once

namespace qng {

// Central numeric tolerances. Closed forms are exact mathematics in
// double precision, so agreement checks use these two knobs everywhere.
inline constexpr double kAbsTol = 1e-12;
inline constexpr double kRelTol = 1e-9;

}  // namespace qng
