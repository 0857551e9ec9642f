#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "loopforge/diag.hpp"
#include "loopforge/mir.hpp"

namespace loopforge::ast {

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
    enum class Kind { IntLit, VarRef, Index, Unary, Binary, Call };
    Kind kind = Kind::IntLit;
    SourceLoc loc;
    int32_t value = 0;       // IntLit
    std::string name;        // VarRef / Index array / Call callee
    mir::UnOp un_op = mir::UnOp::Neg;
    mir::BinOp bin_op = mir::BinOp::Add;
    ExprPtr lhs, rhs;        // Binary; Unary and Index use lhs
    std::vector<ExprPtr> args;
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Stmt {
    enum class Kind {
        Decl, Assign, ExprStmt, Compound, If, While, DoWhile, For,
        Break, Continue, Return, Goto, Label, Empty
    };
    struct Declarator {
        std::string name;
        int array_size = -1; // -1: scalar
        ExprPtr init;        // scalars only
        std::vector<int32_t> array_init;
        bool has_array_init = false;
        SourceLoc loc;
    };

    Kind kind = Kind::Empty;
    SourceLoc loc;
    std::vector<Declarator> decls;           // Decl
    ExprPtr target;                          // Assign: VarRef or Index
    std::optional<mir::BinOp> compound_op;   // Assign: += etc; nullopt for plain =
    ExprPtr value;                           // Assign rhs
    ExprPtr expr;                            // ExprStmt / If / While / DoWhile / Return / For cond
    std::vector<StmtPtr> body;               // Compound
    StmtPtr then_stmt, else_stmt;            // If
    StmtPtr loop_body;                       // While / DoWhile / For
    StmtPtr for_init, for_step;              // For
    std::string label;                       // Goto / Label
};

struct FunctionDecl {
    std::string name;
    std::vector<std::string> params;
    bool returns_void = false;
    StmtPtr body; // null for prototypes
    SourceLoc loc;
};

struct GlobalDecl {
    std::string name;
    int array_size = -1; // -1: scalar
    std::vector<int32_t> init;
    SourceLoc loc;
};

struct UnitAst {
    std::string name;
    std::vector<FunctionDecl> functions; // definitions only
    std::vector<std::string> prototypes;
    std::vector<GlobalDecl> globals;
};

// Parse one preprocessed source file in the supported C subset. Returns
// nullopt after reporting at least one error diagnostic.
std::optional<UnitAst> parse_unit(const std::string& source, const std::string& unit_name,
                                  DiagEngine& diags);

} // namespace loopforge::ast
