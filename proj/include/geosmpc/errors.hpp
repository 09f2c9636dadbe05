#pragma once

#include <stdexcept>
#include <string>

namespace geosmpc {

/// Root of every error this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GEOSMPC_DEFINE_ERROR(Name)     \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  }

// fixedpoint
GEOSMPC_DEFINE_ERROR(RangeError);
GEOSMPC_DEFINE_ERROR(OverflowError);
// circuit
GEOSMPC_DEFINE_ERROR(DimensionError);
GEOSMPC_DEFINE_ERROR(InputSizeError);
GEOSMPC_DEFINE_ERROR(FormatError);
// garble / ot
GEOSMPC_DEFINE_ERROR(IntegrityError);
GEOSMPC_DEFINE_ERROR(LengthError);
GEOSMPC_DEFINE_ERROR(GroupElementError);
// esda / io
GEOSMPC_DEFINE_ERROR(DegenerateData);
GEOSMPC_DEFINE_ERROR(CoincidentPoints);
GEOSMPC_DEFINE_ERROR(ParseError);
GEOSMPC_DEFINE_ERROR(DuplicateGid);
GEOSMPC_DEFINE_ERROR(NonFiniteValue);
GEOSMPC_DEFINE_ERROR(GeometryMismatch);
// session
GEOSMPC_DEFINE_ERROR(ProtocolError);
GEOSMPC_DEFINE_ERROR(ConnectionError);
GEOSMPC_DEFINE_ERROR(NoPeerWaiting);
GEOSMPC_DEFINE_ERROR(PeerVersionMismatch);
GEOSMPC_DEFINE_ERROR(CircuitHashMismatch);
GEOSMPC_DEFINE_ERROR(Timeout);

#undef GEOSMPC_DEFINE_ERROR

}  // namespace geosmpc
