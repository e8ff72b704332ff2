#pragma once

#include <memory>

#include "ncc/task.hpp"

namespace ncc {

std::unique_ptr<Task> make_completion_task();
std::unique_ptr<Task> make_summarization_task();
std::unique_ptr<Task> make_retrieval_task();

}  // namespace ncc
