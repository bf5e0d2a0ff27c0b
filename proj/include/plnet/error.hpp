#pragma once

#include <stdexcept>
#include <string>

namespace plnet {

enum class ErrorKind {
    invalid_argument,  // precondition or configuration violation
    resource_limit,    // a configured size cap would be exceeded
    numerical,         // quadrature/eigensolver did not converge
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error invalid_argument(const std::string& what) { return {ErrorKind::invalid_argument, what}; }
inline Error resource_limit(const std::string& what) { return {ErrorKind::resource_limit, what}; }
inline Error numerical_failure(const std::string& what) { return {ErrorKind::numerical, what}; }

inline void require(bool cond, const std::string& what)
{
    if (!cond) throw invalid_argument(what);
}

}  // namespace plnet
