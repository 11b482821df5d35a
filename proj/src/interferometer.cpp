#include "endqt/interferometer.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "endqt/format.hpp"

namespace endqt::mz {

namespace {

const cdouble kT{1.0 / std::sqrt(2.0), 0.0};
const cdouble kR{0.0, 1.0 / std::sqrt(2.0)};

int pointer_dim(const FockState4& s) { return s.has_detector ? 2 : 1; }

}  // namespace

FockState4 FockState4::input() {
  CVector v = CVector::Zero(4);
  v(0) = 1.0;
  return make(std::move(v), false);
}

FockState4 FockState4::make(CVector amplitudes, bool has_detector) {
  const Eigen::Index want = has_detector ? 8 : 4;
  if (amplitudes.size() != want)
    throw std::invalid_argument("amplitude vector has the wrong length");
  if (std::abs(amplitudes.squaredNorm() - 1.0) > kAlgebraTol)
    throw std::invalid_argument("state is not normalized");
  FockState4 s;
  s.amplitudes = std::move(amplitudes);
  s.has_detector = has_detector;
  return s;
}

cdouble FockState4::channel_amp(int channel, int pointer) const {
  if (channel < 1 || channel > 4) throw std::out_of_range("channel in 1..4");
  const int pd = has_detector ? 2 : 1;
  if (pointer < 0 || pointer >= pd) throw std::out_of_range("pointer index");
  return amplitudes((channel - 1) * pd + pointer);
}

FockState4 beamsplitter(const FockState4& state, Splitter which) {
  const int pd = pointer_dim(state);
  CVector out = state.amplitudes;
  for (int p = 0; p < pd; ++p) {
    if (which == Splitter::bs1) {
      const cdouble a1 = state.amplitudes(0 * pd + p);
      const cdouble a2 = state.amplitudes(1 * pd + p);
      const cdouble a3 = state.amplitudes(2 * pd + p);
      const cdouble a4 = state.amplitudes(3 * pd + p);
      out(2 * pd + p) = kT * a1 + kR * a2;
      out(3 * pd + p) = kR * a1 + kT * a2;
      // keep unitarity by routing the downstream channels back
      out(0 * pd + p) = kT * a3 + kR * a4;
      out(1 * pd + p) = kR * a3 + kT * a4;
    } else {
      const cdouble a3 = state.amplitudes(2 * pd + p);
      const cdouble a4 = state.amplitudes(3 * pd + p);
      out(2 * pd + p) = kT * a3 + kR * a4;
      out(3 * pd + p) = kR * a3 + kT * a4;
    }
  }
  FockState4 s;
  s.amplitudes = std::move(out);
  s.has_detector = state.has_detector;
  return s;
}

FockState4 attach_detector(const FockState4& state) {
  if (state.has_detector) throw std::invalid_argument("detector already attached");
  CVector out = CVector::Zero(8);
  for (int c = 0; c < 4; ++c) out(c * 2 + 0) = state.amplitudes(c);
  FockState4 s;
  s.amplitudes = std::move(out);
  s.has_detector = true;
  return s;
}

FockState4 which_path_coupling(const FockState4& state) {
  if (!state.has_detector)
    throw std::invalid_argument("attach the detector before coupling");
  CVector out = state.amplitudes;
  // |ch3, E0> <-> |ch1, E1>
  std::swap(out(2 * 2 + 0), out(0 * 2 + 1));
  FockState4 s;
  s.amplitudes = std::move(out);
  s.has_detector = true;
  return s;
}

MzResult run_mz(bool detector_d3, bool sdc_connected) {
  MzResult result;
  if (!detector_d3) {
    auto s = beamsplitter(beamsplitter(FockState4::input(), Splitter::bs1),
                          Splitter::bs2);
    std::map<std::string, double> table;
    table["D1"] = std::norm(s.channel_amp(3));
    table["D2"] = std::norm(s.channel_amp(4));
    result.probabilities = std::move(table);
    result.final_state = std::move(s);
    return result;
  }

  auto tapped = which_path_coupling(
      attach_detector(beamsplitter(FockState4::input(), Splitter::bs1)));
  auto s = beamsplitter(tapped, Splitter::bs2);
  if (sdc_connected) {
    std::map<std::string, double> table;
    table["D1"] = std::norm(s.channel_amp(3, 0)) + std::norm(s.channel_amp(3, 1));
    table["D2"] = std::norm(s.channel_amp(4, 0)) + std::norm(s.channel_amp(4, 1));
    table["D3"] = std::norm(s.channel_amp(1, 0)) + std::norm(s.channel_amp(1, 1));
    result.probabilities = std::move(table);
  }
  result.final_state = std::move(s);
  return result;
}

void write_state_csv(const FockState4& state, std::ostream& os) {
  os << "basis,re,im\n";
  const int pd = pointer_dim(state);
  for (int c = 0; c < 4; ++c) {
    for (int p = 0; p < pd; ++p) {
      std::string label = "|";
      for (int k = 0; k < 4; ++k) label += (k == c ? '1' : '0');
      label += ">";
      if (state.has_detector) label += p == 0 ? "|E0>" : "|E1>";
      const cdouble a = state.amplitudes(c * pd + p);
      os << label << ',' << fmt12(a.real()) << ',' << fmt12(a.imag()) << '\n';
    }
  }
}

}  // namespace endqt::mz
