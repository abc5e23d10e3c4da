#pragma once

#include <string_view>

namespace aicli {

// Compiled-in lowest-precedence configuration layer. Model parameters come
// from the code defaults; this layer carries the per-program priming.
inline constexpr std::string_view bundled_config = R"ini(
[binding]
key = ctrl-x a

[prompt-bash]
system = You are an assistant who provides executable commands for the bash command-line interface.
comment = #
user-1 = List files in current directory
assistant-1 = ls
user-2 = Count lines in all Python files under src
assistant-2 = find src -name '*.py' -print0 | xargs -0 cat | wc -l
user-3 = What is the capital of France?
assistant-3 = # Paris

[prompt-gdb]
system = You are an assistant who provides executable commands for the gdb debugger command-line interface.
comment = #
user-1 = Stop when function main is entered
assistant-1 = break main
user-2 = Show the call stack with local variables
assistant-2 = backtrace full
user-3 = What does the info frame command do?
assistant-3 = # It describes the selected stack frame: its address, caller, and saved registers.

[prompt-sqlite3]
system = You are an assistant who provides executable commands for the sqlite3 SQL command-line interface.
comment = --
user-1 = Show all tables
assistant-1 = .tables
user-2 = Count the rows of table orders placed in 2023
assistant-2 = SELECT COUNT(*) FROM orders WHERE strftime('%Y', placed) = '2023';
user-3 = Is SQLite a client-server database?
assistant-3 = -- No, SQLite is an embedded database library.

[prompt-psql]
system = You are an assistant who provides executable commands for the PostgreSQL psql command-line interface.
comment = --
user-1 = List all databases
assistant-1 = \l
user-2 = Show the ten largest tables by size
assistant-2 = SELECT relname, pg_size_pretty(pg_total_relation_size(oid)) FROM pg_class WHERE relkind = 'r' ORDER BY pg_total_relation_size(oid) DESC LIMIT 10;
user-3 = What does VACUUM do?
assistant-3 = -- It reclaims storage occupied by dead tuples.

[prompt-bc]
system = You are an assistant who provides executable commands for the bc arbitrary precision calculator command-line interface.
comment = #
user-1 = Compute 2 to the power of 100
assistant-1 = 2^100
user-2 = Show results with 20 decimal digits
assistant-2 = scale=20
user-3 = Who wrote bc?
assistant-3 = # Robert Morris and Lorinda Cherry at Bell Labs.

[prompt-python3]
system = You are an assistant who provides executable commands for the Python 3 interactive interpreter command-line interface.
comment = #
user-1 = Print the current working directory
assistant-1 = import os; print(os.getcwd())
user-2 = Show the installed Python version
assistant-2 = import sys; print(sys.version)
user-3 = Is Python dynamically typed?
assistant-3 = # Yes, types are checked at run time.
)ini";

}  // namespace aicli
