#ifndef LBSIM_ERROR_HPP
#define LBSIM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lbsim
{

//! Invalid configuration or argument (maps to CLI exit code 1).
class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! Violated data contract, e.g. a malformed trace or duplicate box id.
class ContractError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! File system failure (maps to CLI exit code 2).
class IoError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

namespace detail
{
inline void require( bool cond, const std::string& msg )
{
    if ( !cond )
        throw ConfigError( msg );
}
} // namespace detail

} // namespace lbsim

#endif // LBSIM_ERROR_HPP
