let s = `tmpl ${x.querySelector("p")}`; /* comment getElementById */ // line