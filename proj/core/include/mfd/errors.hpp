#pragma once

#include <stdexcept>
#include <string>

namespace mfd {

class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define MFD_DECLARE_ERROR(Name)                                         \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(#Name, what) {}      \
  };

MFD_DECLARE_ERROR(OutsideTube)
MFD_DECLARE_ERROR(SingularInput)
MFD_DECLARE_ERROR(NotOnManifold)
MFD_DECLARE_ERROR(BallTooLarge)
MFD_DECLARE_ERROR(ResolutionTooCoarse)
MFD_DECLARE_ERROR(Unsupported)
MFD_DECLARE_ERROR(EmptyNeighborhood)
MFD_DECLARE_ERROR(OutsideDomain)
MFD_DECLARE_ERROR(TooFewNeighbors)
MFD_DECLARE_ERROR(NonFiniteState)
MFD_DECLARE_ERROR(NonFiniteActivation)
MFD_DECLARE_ERROR(DegenerateVector)
MFD_DECLARE_ERROR(EmptyCloud)
MFD_DECLARE_ERROR(TrainTooSmall)
MFD_DECLARE_ERROR(OutOfRange)
MFD_DECLARE_ERROR(EmptyTrace)
MFD_DECLARE_ERROR(ConfigError)
MFD_DECLARE_ERROR(InvalidArgument)

#undef MFD_DECLARE_ERROR

}  // namespace mfd
