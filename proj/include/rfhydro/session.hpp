#pragma once

#include <cstddef>
#include <vector>

#include "rfhydro/ofdm_modem.hpp"
#include "rfhydro/types.hpp"

namespace rfhydro {

/// One labeled recording: a CFR snapshot stream from one subject in one
/// hydration state.
struct Session {
  std::vector<CfrSnapshot> snapshots;
  Label label = Label::hydrated;
  Method method = Method::cbdm;
  std::size_t subject_id = 0;
  std::size_t session_index = 0;  ///< index within (subject, label)
  std::size_t session_id = 0;     ///< unique within a dataset
  double snapshot_rate = 250.0;
  std::size_t dropped_snapshots = 0;  ///< removed by artifact rejection

  double duration() const { return static_cast<double>(snapshots.size()) / snapshot_rate; }
};

}  // namespace rfhydro
