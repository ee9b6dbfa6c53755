#pragma once

#include <autosdt/errors.hpp>
#include <autosdt/strings.hpp>

#include <map>
#include <string>
#include <vector>

namespace autosdt {

// The five pipeline prompts. Bodies are fixed assets; placeholders use
// {name} syntax and only declared names are ever substituted, so literal
// braces elsewhere in a body (e.g. "VERDICT: {YES/NO}") pass through.
enum class TemplateId { crawl_filter, sci_verify, dep_locate, adapt, instruct_gen };

inline std::string to_string(TemplateId id) {
    switch (id) {
        case TemplateId::crawl_filter: return "crawl_filter";
        case TemplateId::sci_verify: return "sci_verify";
        case TemplateId::dep_locate: return "dep_locate";
        case TemplateId::adapt: return "adapt";
        case TemplateId::instruct_gen: return "instruct_gen";
    }
    throw Error("bad template id");
}

struct PromptTemplate {
    TemplateId id;
    std::string body;
    std::vector<std::string> placeholders; // in order of first appearance
};

namespace prompt_bodies {

inline constexpr const char* kCrawlFilter =
    R"PROMPT(You are an expert at reading GitHub README.md files thoroughly and determining whether the repository hosts code related to a research paper or not, and you are also skilled at correctly extracting the link to the related paper.

Your answer should be based on your thorough understanding of the content of the README.md file. Does the README.md file indicate that the repository hosts code related to a research paper in the discipline of {keyword}? Answer by 'YES' or 'NO' in the 'RESEARCH'. If your answer to the previous question is 'YES', extract the link to the related research paper. Make sure to extract the link to the research paper that this repository implements only, this should be the link to the paper that people would cite if they used the code in the repository for their work, ignoring all other irrelevant links that might be referenced in the README.md file. Put the link(s) in front of the 'LINKS': as a list of links.

README.md file: {readme}

You should strictly follow the format below:

RESEARCH:

LINKS:)PROMPT";

inline constexpr const char* kSciVerify =
    R"PROMPT(You are an expert at determining whether a program contains scientific code or not. Given a code file, you need to verify if the current code is a scientific task. Several conditions should be satisfied:

1. Functionality: the functionality of the given program should be related to tasks in a scientific workflow. These tasks include but are not limited to feature engineering, machine learning, deep learning, computational analysis, data visualization, model training, numerical calculation/analysis, statistical methods, domain-specific analysis/simulation, etc.
2. Input: the program should receive at least one or multiple datasets as input. In other words, the program is dealing with a dataset and conducting analysis or experiments on top of the data. The data can either be loaded through built-in functions or be loaded from local files. If the current program does not receive and process any data, it cannot be considered as "a scientific task" here.
3. Output: the program should output numerical or visualization results that can be further evaluated.

A code file is considered a scientific task ONLY IF it completely satisfied the three dimensions above. For example, code files that purely contain modeling, training/testing, data pre-processing, or only consist of utility functions or class definitions, are not considered a scientific task.

Program name: {file_name}
Program code: {code}

After reasoning about the problem, output your final answer strictly based on the following format:
VERDICT: {YES/NO})PROMPT";

inline constexpr const char* kDepLocate =
    R"PROMPT(You are an expert software engineer who is very skilled at analyzing Python code files and their repositories to extract dependencies.

In this task you will be given a Python file and the GitHub file tree of the repository it belongs to, your job is to thoroughly understand the code and all the in-repository dependencies it needs. This is because we would like to run this code in a standalone environment and we have to make sure that all the dependencies that the code needs are copied in that environment. Hence, it is very important that you have a thorough understanding of the code and extract all in-repository dependencies needed.

Specifically, your job is to do the following:

1. Recognize whether the code makes use of a dataset. The dataset can either be loaded via built-in library functions (e.g., data = MNIST ()) or loaded from a local file in the repository (csv, jsonl, xls, txt, parquet, or any other file type). If the dataset(s) used in the code are either loaded through built-in library functions or contained within the repository, you should output "Yes" in DATASET_LABEL field. Otherwise, you should output "No".

2. In the case where the dataset used in the code is contained within the repository, you also have to find the relative path to the dataset file, based on the GitHub file tree that will be given to you. You will list the paths to all datasets used in the code as a list of paths after the field DATASET_PATHS.

3. Besides the dataset, now you have to identify all other in-repository dependencies that the code uses, and extract their relative paths based on the file tree given to you. These can be modules, classes, models, or any other dependency that the code imports from a folder within the repository. If you identify that there are in-repository dependencies used, you should put a "Yes" in the MODULE_LABEL. Otherwise, output a "No".

4. In the case of a "Yes", make sure to put the relative paths to all dependencies as a list of paths in the MODULE_PATHS field, based on the GitHub file tree given to you.

5. If based on the code alone you can only identify the folder that contains the dependency but not the exact file only return the path to the folder. This is because you might sometimes not be able to know which file the dependency is exactly located in based on only looking at the file tree. Thus, to stay on the safe side, just give the path to the folder that contains the dependency.

Python code: {code}

Project directory: {directory})PROMPT";

inline constexpr const char* kAdapt =
    R"PROMPT(You are an excellent coder at adapting existing files for standalone executability. You will be given a code file from a Github Repo. Your task is to modify the code into a self-contained program that can be run locally and separately.

Please do not change the original functionality of the code. You must keep the original logic and functionality of the code as much as possible. You should never include dummy/pass statements or empty/mock functions in your response.

You need to slightly modify the source code's input/output logistics and intermediate steps to make it a stand-alone program that can be executed locally. The modified code will then be executed in a local environment. If there are errors, you need to debug the code based on the execution feedback.
All the datasets and dependency files are located at {dataset_path}. If the original code has imported modules from local files, you can assume they exist and do the same imports in your modified code. Here is the directory structure of the dataset and dependency files:
{dataset_structure}

Make sure that the code you generate uses the same input files as the original code. Do not generate dummy input files or input data.

For the output of the programs, your code should save the results to a file named "pred_results/pred_[code_file_name].[extension]", depending on the type of data such as csv, txt, jsonl, etc. ALL outputs of the program should be saved in the directory pred_results/. You should never create new folders or files outside of the specified directory.

Code to be modified:

{code_file_name}

{code}

The user may execute your code and report any exceptions and error messages.
You should address the reported issues and respond with a fixed, complete program.
Note that, when addressing bugs, you should ONLY focus on addressing the errors and exceptions and MUST NOT change or delete the main functionality and logic of the original program just to make it executable.

Keep your response concise and do not use a code block if it's not intended to be executed.
Do not suggest a few line changes, incomplete program outline, or partial code that requires the user to modify. Your response should include a complete, standalone, executable program.

Do not use any interactive Python commands in your program, such as `!pip install numpy`, which will cause execution errors.

Regardless of the iterations of self-debugging, make sure to wrap your program in a code block that specifies the script type, python. For example:
```python
print("Hello World!")
```)PROMPT";

inline constexpr const char* kInstructGen =
    R"PROMPT(You are a helpful agent for generating task instructions based on a code snippet for solving scientific data processing tasks. You need to provide a clear and concise instruction that best describes the functionality of the given code. The instruction should be written in plain English and should be detailed enough so that a person who has no knowledge of the code can understand the task and implement code for it. The instruction should not reveal too many implementation details but also should be precise and not vague. It should be a high-level description of the code's functionality.

You should thoroughly read the scientific data processing code snippet provided, understand the underlying domain-specific concepts behind it, and generate a task instruction that makes correct use of the domain-specific language. In other words, your task instructions should be written as if they are from a domain scientist giving instructions to a junior researcher in their lab.

The structure of the instruction should be as clear as possible: you should clearly specify the goal of the task, clearly name the exact input file/files that should be used, and the output files that should be created and the path to which they should be saved. Additionally, if the output of the program is written to a file, you should specify the format that the output should be written in, based on the implementation given in the code snippet. In cases where, based on your understanding of the code, you deem that the instruction needs more details - for example, if a certain program can use different computational methods to reach a solution - you can add guidelines about the specific method to use in the instruction. In all cases, ensure that the instruction does not include too many implementation details but also that it is precise and does not invite ambiguity or confusion. The format of your instruction should be a concise paragraph of a few lines without any sections. Keep the instruction focused on the high level scientific goal of the task and do not make reference to unnecessary details like "ensure the directory or so and so files exist". Such low level implementation details should never be part of the instruction.

Please generate the instruction based on the code snippet below.

{code})PROMPT";

} // namespace prompt_bodies

inline const std::map<TemplateId, PromptTemplate>& prompt_registry() {
    static const std::map<TemplateId, PromptTemplate> kRegistry = {
        {TemplateId::crawl_filter,
         {TemplateId::crawl_filter, prompt_bodies::kCrawlFilter, {"keyword", "readme"}}},
        {TemplateId::sci_verify,
         {TemplateId::sci_verify, prompt_bodies::kSciVerify, {"file_name", "code"}}},
        {TemplateId::dep_locate,
         {TemplateId::dep_locate, prompt_bodies::kDepLocate, {"code", "directory"}}},
        {TemplateId::adapt,
         {TemplateId::adapt, prompt_bodies::kAdapt,
          {"dataset_path", "dataset_structure", "code_file_name", "code"}}},
        {TemplateId::instruct_gen,
         {TemplateId::instruct_gen, prompt_bodies::kInstructGen, {"code"}}},
    };
    return kRegistry;
}

inline const PromptTemplate& prompt_for(TemplateId id) {
    return prompt_registry().at(id);
}

// Pure substitution of declared placeholders. Every declared placeholder must
// be bound (checked in body order); binding values are inserted verbatim.
inline std::string render(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& bindings) {
    std::string out = tmpl.body;
    for (const auto& name : tmpl.placeholders) {
        auto it = bindings.find(name);
        if (it == bindings.end()) throw MissingBinding(name);
        out = replace_all(std::move(out), "{" + name + "}", it->second);
    }
    return out;
}

inline std::string render(TemplateId id, const std::map<std::string, std::string>& bindings) {
    return render(prompt_for(id), bindings);
}

} // namespace autosdt
