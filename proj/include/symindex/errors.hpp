#pragma once

#include <stdexcept>
#include <string>

namespace symindex {

class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define SYMINDEX_ERROR(Name)                                                  \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what = "") : Error(#Name, what) {}   \
    };

SYMINDEX_ERROR(OddDimension)
SYMINDEX_ERROR(AsymmetricInput)
SYMINDEX_ERROR(EpsExhausted)
SYMINDEX_ERROR(NotBlockTriangular)
SYMINDEX_ERROR(NotLinearlyStable)
SYMINDEX_ERROR(SingularA)
SYMINDEX_ERROR(MissingCallbacks)
SYMINDEX_ERROR(FamilyUnavailable)
SYMINDEX_ERROR(NotNonNull)
SYMINDEX_ERROR(S0Exhausted)
SYMINDEX_ERROR(MissingTprime)
SYMINDEX_ERROR(NoCylinderBlock)
SYMINDEX_ERROR(LedgerMismatch)
SYMINDEX_ERROR(InvalidInput)
SYMINDEX_ERROR(Io)

#undef SYMINDEX_ERROR

class NotSymplectic : public Error {
public:
    explicit NotSymplectic(double residual)
        : Error("NotSymplectic", "residual " + std::to_string(residual)), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class IrregularCrossing : public Error {
public:
    IrregularCrossing(double t, const std::string& what = "")
        : Error("IrregularCrossing", "t=" + std::to_string(t) + (what.empty() ? "" : " " + what)), t_(t) {}
    double t() const noexcept { return t_; }

private:
    double t_;
};

class SingularP : public Error {
public:
    explicit SingularP(double t) : Error("SingularP", "t=" + std::to_string(t)), t_(t) {}
    double t() const noexcept { return t_; }

private:
    double t_;
};

class SplitResidualTooLarge : public Error {
public:
    explicit SplitResidualTooLarge(double r)
        : Error("SplitResidualTooLarge", "residual " + std::to_string(r)), residual_(r) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// stage wrapper used by the pipeline; keeps the original kind
class StageError : public Error {
public:
    StageError(const std::string& stage, const Error& inner)
        : Error(inner.kind(), "[" + stage + "] " + inner.what()), stage_(stage) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace symindex
