#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "endqt/quantum.hpp"

namespace endqt::mz {

// Single photon over four interferometer channels, optionally entangled with
// a which-path pointer qubit (|E0> = no signal, |E1> = signal).
struct FockState4 {
  CVector amplitudes;  // dim 4, or 8 with the pointer attached (channel major)
  bool has_detector = false;

  static FockState4 input();  // |1000>
  static FockState4 make(CVector amplitudes, bool has_detector);

  cdouble channel_amp(int channel, int pointer = 0) const;
  double norm() const { return amplitudes.norm(); }
};

enum class Splitter { bs1, bs2 };

// 50/50 splitter, transmitted amplitude 1/sqrt(2), reflected i/sqrt(2).
// bs1 maps channels (1,2) onto (3,4); bs2 mixes (3,4) in place.
FockState4 beamsplitter(const FockState4& state, Splitter which);

// Attaches the pointer qubit in |E0>.
FockState4 attach_detector(const FockState4& state);

// Which-path tap on channel 3: occupation moves to channel 1 and the pointer
// flips to |E1>; the empty-channel branch is left alone.
FockState4 which_path_coupling(const FockState4& state);

struct DetectorModel {
  int placement_channel = 3;
  bool sdc_connected = true;
};

struct MzResult {
  // Present only when an outcome-producing detector is in play
  // (no detector: D1/D2 statistics; sdc-connected D3: D1/D2/D3).
  std::optional<std::map<std::string, double>> probabilities;
  FockState4 final_state;
};

// Runs |1000> through both splitters. Without D3 the photon always reaches
// D2. With D3 connected the interference is destroyed: (D3, D1, D2) =
// (1/2, 1/4, 1/4). With D3 present but isolated no outcome table exists and
// the entangled pure state is returned.
MzResult run_mz(bool detector_d3, bool sdc_connected = true);

// CSV dump: basis label, re, im.
void write_state_csv(const FockState4& state, std::ostream& os);

}  // namespace endqt::mz
