#pragma once

#include <stdexcept>
#include <string>

namespace qgst {

// Base of every error raised by the library. Subclasses map one-to-one onto
// the failure modes of the individual stages so callers (and the CLI) can
// tell them apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define QGST_DEFINE_ERROR(Name)          \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

QGST_DEFINE_ERROR(NonHermitianError);
QGST_DEFINE_ERROR(NonUnitaryError);
QGST_DEFINE_ERROR(EmptyChannelError);
QGST_DEFINE_ERROR(NotAGroupError);
QGST_DEFINE_ERROR(CompilationError);
QGST_DEFINE_ERROR(UnknownGateError);
QGST_DEFINE_ERROR(DesignError);
QGST_DEFINE_ERROR(NoiseError);
QGST_DEFINE_ERROR(ModelError);
QGST_DEFINE_ERROR(EstimationError);
QGST_DEFINE_ERROR(GaugeError);
QGST_DEFINE_ERROR(BranchError);
QGST_DEFINE_ERROR(DegenerateError);
QGST_DEFINE_ERROR(FitError);
QGST_DEFINE_ERROR(FormatError);
QGST_DEFINE_ERROR(MissingFileError);

#undef QGST_DEFINE_ERROR

}  // namespace qgst
