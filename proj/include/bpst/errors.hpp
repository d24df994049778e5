#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bpst {

/// Base class of every error raised by the library. `kind()` is the stable,
/// machine-readable name used in CLI error reports.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define BPST_DEFINE_ERROR(Name)                                          \
    class Name : public Error {                                          \
    public:                                                              \
        using Error::Error;                                              \
        const char* kind() const noexcept override { return #Name; }     \
    }

BPST_DEFINE_ERROR(ParseError);
BPST_DEFINE_ERROR(DegenerateTriangle);
BPST_DEFINE_ERROR(NonConforming);
BPST_DEFINE_ERROR(IndexOutOfRange);
BPST_DEFINE_ERROR(UnsupportedSmoothness);
BPST_DEFINE_ERROR(NonFiniteIntegrand);
BPST_DEFINE_ERROR(SingularSystem);
BPST_DEFINE_ERROR(SingularBandwidth);
BPST_DEFINE_ERROR(InvalidArgument);

#undef BPST_DEFINE_ERROR

/// Raised when evaluation or fitting points fall outside the triangulated domain.
class PointOutsideDomain : public Error {
public:
    PointOutsideDomain(std::vector<std::size_t> indices)
        : Error(make_message(indices)), indices_(std::move(indices)) {}
    const char* kind() const noexcept override { return "PointOutsideDomain"; }
    const std::vector<std::size_t>& indices() const noexcept { return indices_; }

private:
    static std::string make_message(const std::vector<std::size_t>& idx)
    {
        std::string msg = std::to_string(idx.size()) + " point(s) outside the domain, first at index ";
        msg += idx.empty() ? std::string("?") : std::to_string(idx.front());
        return msg;
    }
    std::vector<std::size_t> indices_;
};

} // namespace bpst
